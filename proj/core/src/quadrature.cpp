#include "meanforce/quadrature.hpp"

#include "meanforce/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace meanforce {

void QuadratureSpec::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
        throw std::invalid_argument("quadrature tolerances must be positive");
    }
    if (max_subdivisions < 10) {
        throw std::invalid_argument("quadrature max_subdivisions must be >= 10");
    }
    if (!(omega_max_factor > 0.0) || !std::isfinite(omega_max_factor)) {
        throw std::invalid_argument("quadrature omega_max_factor must be positive and finite");
    }
}

namespace {

// Kronrod abscissae (xgk) and weights; Gauss weights on the odd Kronrod nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kUflow = std::numeric_limits<double>::min();

template <int N>
struct Segment {
    double a = 0.0;
    double b = 0.0;
    bool mapped = false;
    QuadVector<N> value = QuadVector<N>::Zero();
    double error = 0.0;
};

template <int N>
class AdaptiveEngine {
public:
    AdaptiveEngine(const Integrand<N>& f, double omega_cut, const QuadratureSpec& spec)
        : f_(f), omega_cut_(omega_cut), spec_(spec) {}

    void add(double a, double b, bool mapped) {
        Segment<N> s{a, b, mapped};
        evaluate(s);
        segments_.push_back(s);
    }

    QuadratureResult<N> run() {
        int subdivisions = 0;
        for (;;) {
            QuadVector<N> total = QuadVector<N>::Zero();
            double error = 0.0;
            std::size_t worst = 0;
            for (std::size_t i = 0; i < segments_.size(); ++i) {
                total += segments_[i].value;
                error += segments_[i].error;
                if (segments_[i].error > segments_[worst].error) worst = i;
            }
            const double target =
                std::max(spec_.abs_tol, spec_.rel_tol * total.cwiseAbs().maxCoeff());
            if (error <= target) {
                return QuadratureResult<N>{total, error, evaluations_, subdivisions};
            }
            if (subdivisions >= spec_.max_subdivisions) {
                std::ostringstream msg;
                msg << "adaptive quadrature did not reach tolerance " << target
                    << " within " << spec_.max_subdivisions << " subdivisions (estimated error "
                    << error << ")";
                throw QuadratureFailure(msg.str());
            }
            Segment<N> parent = segments_[worst];
            const double mid = 0.5 * (parent.a + parent.b);
            if (!(mid > parent.a && mid < parent.b)) {
                std::ostringstream msg;
                msg << "adaptive quadrature cannot subdivide [" << parent.a << ", " << parent.b
                    << "] further (estimated error " << error << ", target " << target << ")";
                throw QuadratureFailure(msg.str());
            }
            Segment<N> left{parent.a, mid, parent.mapped};
            Segment<N> right{mid, parent.b, parent.mapped};
            evaluate(left);
            evaluate(right);
            segments_[worst] = left;
            segments_.push_back(right);
            ++subdivisions;
        }
    }

private:
    QuadVector<N> sample(double x, bool mapped) {
        ++evaluations_;
        QuadVector<N> v;
        double omega = x;
        if (mapped) {
            const double one_minus = 1.0 - x;
            omega = omega_cut_ / one_minus;
            v = f_(omega) * (omega_cut_ / (one_minus * one_minus));
        } else {
            v = f_(x);
        }
        if (!v.allFinite()) {
            std::ostringstream msg;
            msg << "integrand is not finite at omega = " << omega;
            throw QuadratureFailure(msg.str());
        }
        return v;
    }

    void evaluate(Segment<N>& s) {
        const double center = 0.5 * (s.a + s.b);
        const double half = 0.5 * (s.b - s.a);
        const double abs_half = std::abs(half);

        const QuadVector<N> fc = sample(center, s.mapped);
        QuadVector<N> resg = fc * kWg[3];
        QuadVector<N> resk = fc * kWgk[7];
        QuadVector<N> resabs = fc.cwiseAbs() * kWgk[7];
        std::array<QuadVector<N>, 7> fv1;
        std::array<QuadVector<N>, 7> fv2;
        for (int j = 0; j < 7; ++j) {
            const double dx = half * kXgk[j];
            fv1[j] = sample(center - dx, s.mapped);
            fv2[j] = sample(center + dx, s.mapped);
            const QuadVector<N> sum = fv1[j] + fv2[j];
            resk += kWgk[j] * sum;
            resabs += kWgk[j] * (fv1[j].cwiseAbs() + fv2[j].cwiseAbs());
            if (j % 2 == 1) resg += kWg[j / 2] * sum;
        }
        const QuadVector<N> reskh = resk * 0.5;
        QuadVector<N> resasc = kWgk[7] * (fc - reskh).cwiseAbs();
        for (int j = 0; j < 7; ++j) {
            resasc += kWgk[j] * ((fv1[j] - reskh).cwiseAbs() + (fv2[j] - reskh).cwiseAbs());
        }

        double worst = 0.0;
        for (int k = 0; k < resk.size(); ++k) {
            const double ra = resabs[k] * abs_half;
            const double rs = resasc[k] * abs_half;
            double err = std::abs((resk[k] - resg[k]) * half);
            if (rs != 0.0 && err != 0.0) err = rs * std::min(1.0, std::pow(200.0 * err / rs, 1.5));
            if (ra > kUflow / (50.0 * kEps)) err = std::max(50.0 * kEps * ra, err);
            worst = std::max(worst, err);
        }
        s.value = resk * half;
        s.error = worst;
    }

    const Integrand<N>& f_;
    double omega_cut_;
    QuadratureSpec spec_;
    std::vector<Segment<N>> segments_;
    int evaluations_ = 0;
};

} // namespace

template <int N>
QuadratureResult<N> integrate_interval(const Integrand<N>& f, double a, double b,
                                       const QuadratureSpec& spec) {
    spec.validate();
    if (!std::isfinite(a) || !std::isfinite(b)) {
        throw std::invalid_argument("integrate_interval needs finite limits");
    }
    AdaptiveEngine<N> engine(f, 0.0, spec);
    if (a == b) return {};
    engine.add(a, b, false);
    return engine.run();
}

template <int N>
QuadratureResult<N> integrate_half_line(const Integrand<N>& f, std::vector<double> breakpoints,
                                        double omega_cut, const QuadratureSpec& spec) {
    spec.validate();
    if (!(omega_cut > 0.0) || !std::isfinite(omega_cut)) {
        throw std::invalid_argument("integrate_half_line needs a positive finite cutoff");
    }
    breakpoints.erase(std::remove_if(breakpoints.begin(), breakpoints.end(),
                                     [&](double x) { return !(x > 0.0 && x < omega_cut); }),
                      breakpoints.end());
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());

    AdaptiveEngine<N> engine(f, omega_cut, spec);
    double left = 0.0;
    for (double x : breakpoints) {
        engine.add(left, x, false);
        left = x;
    }
    engine.add(left, omega_cut, false);
    engine.add(0.0, 1.0, true);
    return engine.run();
}

template QuadratureResult<1> integrate_interval<1>(const Integrand<1>&, double, double,
                                                   const QuadratureSpec&);
template QuadratureResult<9> integrate_interval<9>(const Integrand<9>&, double, double,
                                                   const QuadratureSpec&);
template QuadratureResult<1> integrate_half_line<1>(const Integrand<1>&, std::vector<double>,
                                                    double, const QuadratureSpec&);
template QuadratureResult<9> integrate_half_line<9>(const Integrand<9>&, std::vector<double>,
                                                    double, const QuadratureSpec&);

} // namespace meanforce

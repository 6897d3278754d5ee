#include "ldhit/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "ldhit/parallel.hpp"

namespace ldhit {

namespace {

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on the
// Legendre recurrence.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

// composite panel rule on [a, b]
void panel_rule(double a, double b, int panels, int order, std::vector<double>& nodes,
                std::vector<double>& weights) {
    std::vector<double> x, w;
    gauss_legendre(order, x, w);
    nodes.clear();
    weights.clear();
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double c = a + (p + 0.5) * h;
        for (int k = 0; k < order; ++k) {
            nodes.push_back(c + 0.5 * h * x[k]);
            weights.push_back(0.5 * h * w[k]);
        }
    }
}

}  // namespace

LaplaceQuantities laplace_quantities(const HalfSpaceGeometry& geom) {
    LaplaceQuantities q;
    q.sigma2_d = geom.sigma2_d();
    q.a_ug = geom.a_coeff();
    q.sigma_star_d = std::sqrt(q.sigma2_d + q.a_ug / geom.report().u_g);
    q.sigma_alpha = std::sqrt(geom.evaluator().sigma2(geom.report().alpha_star));
    return q;
}

// ---------------------------------------------------------------------------
// p and q estimators

OrthantHitting::OrthantHitting(const JumpModel& model, const MppReport& report)
    : model_(model), normal_(report.normal), zeta_(report.zeta) {
    normal_norm_ = normal_.norm();
    tilt_ = normal_;
    const Vec tilted_mean = model_.cumulant_grad(tilt_);
    q_drift_ = normal_.dot(tilted_mean);
    q_step_sd_ = std::sqrt(normal_.dot(model_.cumulant_hess(tilt_) * normal_));
    const int d = model_.dim();
    nu_coord_ = Vec::Zero(d);
    for (int i = 0; i < d; ++i) nu_coord_[i] = lundberg_exponent(model_, Vec::Unit(d, i));
}

PointEstimate OrthantHitting::estimate_p(const Vec& z, std::uint64_t n_samples, int horizon,
                                         std::uint64_t seed, double stop_tol) const {
    const int d = model_.dim();
    if (z.size() != d) throw ConfigError("z has wrong dimension");
    if ((z.array() >= 0.0).all()) return {1.0, 0.0};

    const Vec target = -z;
    const double log_margin =
        stop_tol > 0.0 ? -std::log(stop_tol) : std::numeric_limits<double>::infinity();

    std::uint64_t hits = 0;
    Vec s_vec(d);
    for (std::uint64_t traj = 0; traj < n_samples; ++traj) {
        Rng rng = Rng::stream(seed, traj);
        s_vec.setZero();
        for (int step = 0; step < horizon; ++step) {
            s_vec += model_.sample(rng);
            if ((s_vec.array() >= target.array()).all()) {
                ++hits;
                break;
            }
            const double gap_zeta = (target - s_vec).dot(zeta_);
            double best = normal_norm_ * gap_zeta;
            for (int i = 0; i < d; ++i)
                if (nu_coord_[i] > 0.0 && s_vec[i] < target[i])
                    best = std::max(best, nu_coord_[i] * (target[i] - s_vec[i]));
            if (best >= log_margin) break;
        }
    }
    const double n = static_cast<double>(n_samples);
    PointEstimate out;
    out.value = static_cast<double>(hits) / n;
    out.std_error = std::sqrt(std::max(0.0, out.value * (1.0 - out.value)) / n);
    return out;
}

int OrthantHitting::q_horizon_for(double threshold) const {
    // smallest n with drift*n >= threshold + 6 sd sqrt(n)
    const double need = std::max(threshold, 0.0);
    const double s6 = 6.0 * q_step_sd_;
    const double root = (s6 + std::sqrt(s6 * s6 + 4.0 * q_drift_ * need)) / (2.0 * q_drift_);
    const double n = std::ceil(root * root) + 1.0;
    return static_cast<int>(std::min(n, 1e6));
}

PointEstimate OrthantHitting::estimate_q(const Vec& z, std::uint64_t n_samples, int horizon,
                                         std::uint64_t seed, double stop_tol) const {
    if (z.size() != model_.dim()) throw ConfigError("z has wrong dimension");
    const double threshold = normal_.dot(z);
    const double log_margin =
        stop_tol > 0.0 ? -std::log(stop_tol) : std::numeric_limits<double>::infinity();
    if (horizon <= 0)
        horizon = q_horizon_for(threshold + (stop_tol > 0.0 ? log_margin : 40.0));

    std::uint64_t holds = 0;
    for (std::uint64_t traj = 0; traj < n_samples; ++traj) {
        Rng rng = Rng::stream(seed, traj);
        double proj = 0.0;
        bool ok = true;
        for (int step = 0; step < horizon; ++step) {
            proj += normal_.dot(model_.sample_tilted(tilt_, rng));
            if (proj < threshold) {
                ok = false;
                break;
            }
            if (proj - threshold >= log_margin) break;
        }
        if (ok) ++holds;
    }
    const double n = static_cast<double>(n_samples);
    PointEstimate out;
    out.value = static_cast<double>(holds) / n;
    out.std_error = std::sqrt(std::max(0.0, out.value * (1.0 - out.value)) / n);
    return out;
}

// ---------------------------------------------------------------------------
// E-integral

namespace {

// Certified bound on the mass of e^{-||N|| y} p(t e + y zeta), integrated
// over one tangential side { t > T, y > 0 } in two dimensions, from the
// Lundberg decay of the coordinate with growing deficit.
double side_tail_bound_2d(double T, double b, double nu, double zc, double n_norm) {
    // b = |tangential component|, zc = zeta component of the decaying
    // coordinate, nu = its Lundberg exponent
    const double a1 = n_norm * b / zc;
    const double p2 = std::exp(-a1 * T) / (a1 * n_norm);
    double p1;
    if (n_norm > nu * zc) {
        const double a2 = nu * b;
        p1 = std::exp(-a2 * T) / (a2 * (n_norm - nu * zc));
    } else {
        p1 = (b / zc) * std::exp(-a1 * T) * (T + 1.0 / a1) / a1;
    }
    return p1 + p2;
}

double tangential_tail_bound(const HalfSpaceGeometry& geom, const OrthantHitting& oh, double T) {
    const int d = geom.evaluator().model().dim();
    if (d != 2) throw TruncationBudgetExceeded(
        "certified tangential tail bound is implemented for d = 2; pass explicit radii "
        "with tail_tol = 0 for higher dimensions");
    const Vec e = geom.frame().row(0);
    const Vec& zeta = geom.report().zeta;
    const Vec& nu = oh.coordinate_exponents();
    const double n_norm = oh.normal_norm();

    double total = 0.0;
    for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? 1.0 : -1.0;
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 2; ++i) {
            const double b = -sign * e[i];
            if (b > 0.0 && nu[i] > 0.0)
                best = std::min(best, side_tail_bound_2d(T, b, nu[i], zeta[i], n_norm));
        }
        if (!std::isfinite(best))
            throw TruncationBudgetExceeded(
                "no negative-drift coordinate certifies the tangential tail on one side");
        total += best;
    }
    return total;
}

}  // namespace

EIntegralEstimate estimate_e_integral(const HalfSpaceGeometry& geom,
                                      const EIntegralSettings& settings) {
    const RateEvaluator& ev = geom.evaluator();
    const JumpModel& model = ev.model();
    const int d = model.dim();
    const OrthantHitting oh(model, geom.report());
    const double n_norm = oh.normal_norm();

    EIntegralEstimate out;
    out.settings = settings;

    // truncation radii: certified when tail_tol > 0, explicit otherwise
    double radius_t = settings.tangential_radius;
    double radius_y = settings.y_radius;
    if (settings.tail_tol > 0.0) {
        if (radius_t <= 0.0) {
            radius_t = 1.0;
            while (tangential_tail_bound(geom, oh, radius_t) > 0.5 * settings.tail_tol) {
                radius_t *= 2.0;
                if (radius_t > 1e6)
                    throw TruncationBudgetExceeded("tangential radius exceeds budget");
            }
        }
        const double t_tail = tangential_tail_bound(geom, oh, radius_t);
        if (t_tail > 0.5 * settings.tail_tol)
            throw TruncationBudgetExceeded("requested tangential radius cannot certify tail_tol");
        double width = 1.0;
        for (int k = 0; k < d - 1; ++k) width *= 2.0 * radius_t;
        if (radius_y <= 0.0)
            radius_y = std::log(std::max(1.0, 2.0 * width / (n_norm * 0.5 * settings.tail_tol))) /
                       n_norm;
        const double y_tail = width * std::exp(-n_norm * radius_y) / n_norm;
        if (y_tail > 0.5 * settings.tail_tol + 1e-15)
            throw TruncationBudgetExceeded("requested normal radius cannot certify tail_tol");
        out.tail_bound = t_tail + y_tail;
    } else {
        if (radius_t <= 0.0 || radius_y <= 0.0)
            throw ConfigError("explicit radii required when tail certification is disabled");
        out.tail_bound = std::numeric_limits<double>::quiet_NaN();
    }
    out.tangential_radius = radius_t;
    out.y_radius = radius_y;

    std::vector<double> ty, wy, tx, wx;
    panel_rule(0.0, radius_y, settings.panels_normal, settings.gl_order, ty, wy);
    panel_rule(-radius_t, radius_t, settings.panels_tangential, settings.gl_order, tx, wx);
    const std::size_t ny = ty.size();
    const std::size_t nt = tx.size();

    // tangential tensor grid over d-1 axes
    std::size_t n_tan = 1;
    for (int k = 0; k < d - 1; ++k) n_tan *= nt;

    const Mat& frame = geom.frame();
    const Vec& zeta = geom.report().zeta;

    // q along the normal ray
    std::vector<PointEstimate> qv(ny);
    if (settings.force_unit_q) {
        for (auto& q : qv) q = {1.0, 0.0};
    } else {
        parallel_blocks(ny, 1, resolve_threads(settings.threads),
                        [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t j = begin; j < end; ++j)
                qv[j] = oh.estimate_q(ty[j] * zeta, settings.q_samples, settings.q_horizon,
                                      Rng::mix(settings.seed, 0x71000000ULL + j),
                                      settings.stop_tol);
        });
    }

    // p on the full node tensor, one stream per node
    std::vector<PointEstimate> pv(n_tan * ny);
    if (settings.force_unit_p) {
        for (auto& p : pv) p = {1.0, 0.0};
    } else {
        parallel_blocks(n_tan * ny, 8, resolve_threads(settings.threads),
                        [&](std::size_t, std::size_t begin, std::size_t end) {
            Vec z(d);
            for (std::size_t idx = begin; idx < end; ++idx) {
                const std::size_t j = idx / n_tan;   // y index
                std::size_t rest = idx % n_tan;      // tangential multi-index
                z = ty[j] * zeta;
                for (int k = 0; k < d - 1; ++k) {
                    z += tx[rest % nt] * frame.row(k).transpose();
                    rest /= nt;
                }
                pv[idx] = oh.estimate_p(z, settings.p_samples, settings.p_horizon,
                                        Rng::mix(settings.seed, 0x50000000ULL + idx),
                                        settings.stop_tol);
            }
        });
    }

    double value = 0.0, variance = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
        double inner = 0.0, inner_var = 0.0;
        for (std::size_t r = 0; r < n_tan; ++r) {
            double wt = 1.0;
            std::size_t rest = r;
            for (int k = 0; k < d - 1; ++k) {
                wt *= wx[rest % nt];
                rest /= nt;
            }
            const PointEstimate& p = pv[j * n_tan + r];
            inner += wt * p.value;
            inner_var += wt * wt * p.std_error * p.std_error;
        }
        const double c = wy[j] * std::exp(-n_norm * ty[j]);
        value += c * qv[j].value * inner;
        const double qvar = qv[j].std_error * qv[j].std_error;
        variance += c * c * (qv[j].value * qv[j].value * inner_var + inner * inner * qvar +
                             inner_var * qvar);
    }
    out.value = value;
    out.std_error = std::sqrt(variance);
    return out;
}

PointEstimate constant_a(const LaplaceQuantities& laplace, const EIntegralEstimate& e_est,
                         double u_g, int dim) {
    const double denom = std::pow(2.0 * M_PI, 0.5 * (dim - 1)) * std::pow(u_g, 0.5 * dim) *
                         laplace.sigma_star_d * laplace.sigma_alpha;
    return {e_est.value / denom, e_est.std_error / denom};
}

double predict(const AsymptoticModel& model, double s) {
    if (!(s > 0.0)) throw ConfigError("s must be positive");
    return model.a * std::pow(s, -0.5 * (model.dim - 1)) * std::exp(-s * model.d_g);
}

FitResult fit_asymptote(const std::vector<McRun>& runs, int dim) {
    double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
    FitResult fit;
    std::vector<std::pair<double, double>> used;  // (s, y)
    std::vector<double> weights;
    for (const McRun& run : runs) {
        if (!(run.estimate > 0.0) || !(run.std_error > 0.0)) continue;
        const double y = std::log(run.estimate) + 0.5 * (dim - 1) * std::log(run.s);
        const double rel = run.std_error / run.estimate;
        const double w = 1.0 / (rel * rel);  // delta-method variance of ln estimate
        used.emplace_back(run.s, y);
        weights.push_back(w);
        sw += w;
        swx += w * run.s;
        swy += w * y;
        swxx += w * run.s * run.s;
        swxy += w * run.s * y;
    }
    fit.n_used = used.size();
    if (fit.n_used < 2) throw DegenerateFit("need at least two usable grid points");

    // y = b - D s
    const double det = sw * swxx - swx * swx;
    if (!(std::abs(det) > 1e-12 * sw * swxx))
        throw DegenerateFit("design matrix is rank deficient");
    const double b = (swxx * swy - swx * swxy) / det;
    const double d_fit = -((sw * swxy - swx * swy) / det);

    fit.a_fit = std::exp(b);
    fit.d_fit = d_fit;
    // covariance of (b, slope) under the stated weights
    fit.log_a_se = std::sqrt(swxx / det);
    fit.d_se = std::sqrt(sw / det);
    fit.residuals.reserve(fit.n_used);
    for (const auto& [s, y] : used) fit.residuals.push_back(y - (b - d_fit * s));
    return fit;
}

}  // namespace ldhit

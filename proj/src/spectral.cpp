#include "ssm/spectral.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "ssm/disintegration.hpp"
#include "ssm/rng.hpp"

namespace ssm {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 6.28318530717958647692;

double dist_to_nearest_int(double x) {
  const double r = x - std::nearbyint(x);
  return std::abs(r);
}

int thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SSM_LAB_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 2;
}

}  // namespace

Complex fourier_at(const DiscreteMeasure& mu, Complex xi) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Complex a = mu.atoms()[i];
    const double phase = kTwoPi * (a.real() * xi.real() + a.imag() * xi.imag());
    const double w = to_double(mu.weights()[i]);
    re += w * std::cos(phase);
    im += w * std::sin(phase);
  }
  return {re, im};
}

std::vector<Complex> fourier(const DiscreteMeasure& mu, const std::vector<Complex>& xis) {
  std::vector<Complex> out;
  out.reserve(xis.size());
  for (const auto& xi : xis) out.push_back(fourier_at(mu, xi));
  return out;
}

// ---- decay exponent ------------------------------------------------------------

DecayFitReport decay_exponent(const DiscreteMeasure& mu, int j_min, int j_max,
                              int samples_per_band, const std::vector<double>& angles) {
  if (j_max - j_min + 1 < 4) throw std::invalid_argument("need at least 4 dyadic bands");
  if (samples_per_band < 2) throw std::invalid_argument("need >= 2 samples per band");
  if (angles.empty()) throw std::invalid_argument("need at least one direction");

  DecayFitReport report;
  const double h_min = min_pairwise_distance(mu.atoms(), 0.0);
  report.atom_floor_frequency =
      h_min > 0.0 ? 0.25 / h_min : std::numeric_limits<double>::infinity();

  std::vector<double> fit_x, fit_y;
  for (int j = j_min; j <= j_max; ++j) {
    DecayBand band;
    band.j = j;
    band.center = std::ldexp(std::sqrt(2.0), j);  // geometric center of [2^j, 2^{j+1})
    double envelope = 0.0;
    for (int s = 0; s < samples_per_band; ++s) {
      const double modulus = std::ldexp(std::pow(2.0, (s + 0.5) / samples_per_band), j);
      for (double a : angles) {
        const Complex xi = modulus * Complex(std::cos(a), std::sin(a));
        envelope = std::max(envelope, std::abs(fourier_at(mu, xi)));
      }
    }
    band.envelope = envelope;
    band.floor_flagged = band.center > report.atom_floor_frequency || envelope <= 0.0;
    if (!band.floor_flagged) {
      fit_x.push_back(std::log2(band.center));
      fit_y.push_back(std::log2(envelope));
    }
    report.bands.push_back(band);
  }
  if (fit_x.size() >= 2) {
    report.sigma = -fit_slope(fit_x, fit_y);
    // residuals of the fit, per unflagged band
    double intercept = 0.0;
    for (std::size_t i = 0; i < fit_x.size(); ++i)
      intercept += fit_y[i] + report.sigma * fit_x[i];
    intercept /= static_cast<double>(fit_x.size());
    report.intercept = intercept;
    for (std::size_t i = 0; i < fit_x.size(); ++i)
      report.residuals.push_back(fit_y[i] - (intercept - report.sigma * fit_x[i]));
  }
  return report;
}

double DecayFitReport::fitted_envelope(double center) const {
  return std::pow(2.0, intercept - sigma * std::log2(center));
}

// ---- product bound -------------------------------------------------------------

ProductBoundResult product_bound(const Model& model, const std::vector<int>& omega,
                                 int special_index, Complex xi) {
  const Ifs& special = model.systems[static_cast<size_t>(special_index)];
  if (special.size() < 2)
    throw std::invalid_argument("special system needs at least two maps");
  if (std::abs(special.maps[0].t) > 1e-12 || std::abs(special.maps[1].t - 1.0) > 1e-12)
    throw std::invalid_argument("product bound requires normalization t1 = 0, t2 = 1");

  const double p1 = to_double(special.probs[0]);
  const double p2 = to_double(special.probs[1]);
  const double p_min = std::min(p1, p2);
  const double p_max = std::max(p1, p2);

  ProductBoundResult res;
  // |p1 + p2 e^{2 pi i x}| <= p1 + p2 - (8 p1 p2/(p1+p2)) ||x||^2 and
  // 8 p1 p2/(p1+p2) >= 4 p_min^2 / p_max, a constant of the interval only
  res.c1 = 4.0 * p_min * p_min / p_max;

  Complex prefix = 1.0;
  res.bound = 1.0;
  for (int s : omega) {
    if (s == special_index) {
      const double arg =
          dist_to_nearest_int(prefix.real() * xi.real() + prefix.imag() * xi.imag());
      res.factor_args.push_back(arg);
      res.bound *= 1.0 - res.c1 * arg * arg;
    }
    prefix *= model.lambda(s);
  }
  return res;
}

// ---- EK constants ---------------------------------------------------------------

namespace {

// forward map x_j = Re(theta^{j-3} (x3 + i y3))
std::array<double, 3> recovery_residual(Complex theta, double y3,
                                        const std::array<double, 4>& x) {
  const Complex w(x[3], y3);
  std::array<double, 3> f{};
  Complex inv = 1.0 / theta;
  Complex p = inv;  // theta^{-1}
  f[2] = (p * w).real() - x[2];
  p *= inv;
  f[1] = (p * w).real() - x[1];
  p *= inv;
  f[0] = (p * w).real() - x[0];
  return f;
}

double residual_norm(const std::array<double, 3>& f) {
  return std::max({std::abs(f[0]), std::abs(f[1]), std::abs(f[2])});
}

bool solve3(double a[3][3], double b[3], double out[3]) {
  int perm[3] = {0, 1, 2};
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[perm[r]][c]) > std::abs(a[perm[piv]][c])) piv = r;
    std::swap(perm[c], perm[piv]);
    if (std::abs(a[perm[c]][c]) < 1e-300) return false;
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[perm[r]][c] / a[perm[c]][c];
      for (int cc = c; cc < 3; ++cc) a[perm[r]][cc] -= f * a[perm[c]][cc];
      b[perm[r]] -= f * b[perm[c]];
    }
  }
  for (int c = 2; c >= 0; --c) {
    double s = b[perm[c]];
    for (int cc = c + 1; cc < 3; ++cc) s -= a[perm[c]][cc] * out[cc];
    out[c] = s / a[perm[c]][c];
  }
  return true;
}

bool newton_recover(Complex theta0, double y30, const std::array<double, 4>& x,
                    double scale, Complex& theta_out, double& y3_out, double& res_out) {
  Complex theta = theta0;
  double y3 = y30;
  auto f = recovery_residual(theta, y3, x);
  double r = residual_norm(f);
  for (int iter = 0; iter < 80; ++iter) {
    if (r < 1e-13 * scale) break;
    // Jacobian wrt (Re theta, Im theta, y3)
    const Complex w(x[3], y3);
    double jac[3][3];
    for (int j = 0; j < 3; ++j) {
      const int e = j - 3;
      const Complex pw = complex_power(theta, Complex(e, 0)) * w;  // theta^{j-3} w
      const Complex d_dtheta = static_cast<double>(e) * pw / theta;
      jac[j][0] = d_dtheta.real();
      jac[j][1] = -d_dtheta.imag();  // d Re(g)/d Im(theta) with g analytic in theta
      const Complex d_dy3 = complex_power(theta, Complex(e, 0)) * Complex(0, 1);
      jac[j][2] = d_dy3.real();
    }
    double rhs[3] = {-f[0], -f[1], -f[2]};
    double step[3];
    if (!solve3(jac, rhs, step)) return false;
    double damp = 1.0;
    for (int half = 0; half < 30; ++half) {
      const Complex theta_try = theta + damp * Complex(step[0], step[1]);
      const double y3_try = y3 + damp * step[2];
      if (theta_try.imag() > 0.0 && std::abs(theta_try) > 1.0) {
        const auto f_try = recovery_residual(theta_try, y3_try, x);
        const double r_try = residual_norm(f_try);
        if (r_try < r) {
          theta = theta_try;
          y3 = y3_try;
          f = f_try;
          r = r_try;
          break;
        }
      }
      damp *= 0.5;
      if (half == 29) {
        theta_out = theta;
        y3_out = y3;
        res_out = r;
        return r < 1e-9 * scale;  // stalled; accept only if already converged
      }
    }
  }
  theta_out = theta;
  y3_out = y3;
  res_out = r;
  return r < 1e-9 * scale;
}

}  // namespace

ThetaRecovery recover_theta(const std::array<double, 4>& x, const EkDomain& domain) {
  double scale = 1.0;
  for (double v : x) scale = std::max(scale, std::abs(v));

  ThetaRecovery best;
  best.residual = std::numeric_limits<double>::infinity();
  auto attempt = [&](Complex theta0, double y30) {
    Complex theta;
    double y3, res;
    if (newton_recover(theta0, y30, x, scale, theta, y3, res) && res < best.residual) {
      best.theta = theta;
      best.y3 = y3;
      best.residual = res;
    }
  };
  auto y3_init = [&](Complex theta0) {
    // given theta, the j=2 equation is linear in y3
    const Complex inv = 1.0 / theta0;
    return std::abs(inv.imag()) > 1e-12 ? (inv.real() * x[3] - x[2]) / inv.imag() : 0.0;
  };

  // algebraic seed: x_{j+2} = 2 Re(theta) x_{j+1} - |theta|^2 x_j, so the
  // trace and norm of theta solve a 2x2 linear system in exact data
  const double det = x[0] * x[2] - x[1] * x[1];
  if (std::abs(det) > 1e-12 * scale * scale) {
    const double trace2 = (x[0] * x[3] - x[1] * x[2]) / det;  // 2 Re(theta)
    const double norm = (x[1] * x[3] - x[2] * x[2]) / det;    // |theta|^2
    const double im2 = norm - 0.25 * trace2 * trace2;
    if (im2 > 0.0) {
      const Complex seed(0.5 * trace2, std::sqrt(im2));
      if (std::abs(seed) > 1.0) attempt(seed, y3_init(seed));
    }
  }

  if (!(best.residual < 1e-9 * scale)) {
    for (int mi = 0; mi < 6 && !(best.residual < 1e-9 * scale); ++mi) {
      const double modulus = domain.a + (domain.b - domain.a) * (mi + 0.5) / 6.0;
      for (int ai = 0; ai < 16; ++ai) {
        const double angle = kPi * (ai + 0.5) / 16.0;
        const Complex theta0 = modulus * Complex(std::cos(angle), std::sin(angle));
        attempt(theta0, y3_init(theta0));
      }
    }
  }
  if (!(best.residual < 1e-9 * scale))
    throw SolverError("theta recovery failed; best residual " +
                      std::to_string(best.residual));
  return best;
}

namespace {

// Smallest magnitude at which theta recovery stays solvable (with the
// imaginary part positive) under worst-case half-integer perturbations of
// the inputs. The existence proof fixes R0(a,b,eta) abstractly; we probe
// for an effective value, hardest near Im(theta) = eta.
double determine_recovery_radius(const EkDomain& domain) {
  const double moduli[3] = {domain.a, 0.5 * (domain.a + domain.b), domain.b};
  const double ims[3] = {domain.im_min * 1.02, 2.0 * domain.im_min, 0.4 * domain.b};
  for (double r0 : {1e2, 3e2, 1e3, 3e3, 1e4, 3e4, 1e5, 3e5, 1e6, 3e6}) {
    EkDomain probe = domain;
    probe.a = domain.a;
    bool ok = true;
    for (double mod : moduli) {
      for (double im : ims) {
        if (im >= mod) continue;
        const Complex theta(std::sqrt(mod * mod - im * im), im);
        for (int zi = 0; zi < 8 && ok; ++zi) {
          const Complex z0 = r0 * std::polar(1.0, kTwoPi * (zi + 0.3) / 8.0);
          std::array<double, 4> x{};
          Complex p = 1.0;
          for (int j = 0; j < 4; ++j) {
            x[static_cast<size_t>(j)] = (p * z0).real();
            p *= theta;
          }
          // the dangerous direction flattens the recovered Im(theta)^2;
          // estimate its gradient and probe half-integer steps along it
          auto im2_of = [](const std::array<double, 4>& v) {
            const double det = v[0] * v[2] - v[1] * v[1];
            if (det == 0.0) return 0.0;
            const double tr2 = (v[0] * v[3] - v[1] * v[2]) / det;
            const double nn = (v[1] * v[3] - v[2] * v[2]) / det;
            return nn - 0.25 * tr2 * tr2;
          };
          std::array<double, 4> grad_sign{};
          for (int j = 0; j < 4; ++j) {
            auto xh = x;
            xh[static_cast<size_t>(j)] += 1e-3;
            grad_sign[static_cast<size_t>(j)] =
                im2_of(xh) >= im2_of(x) ? 1.0 : -1.0;
          }
          std::vector<std::array<double, 4>> deltas = {
              {0, 0, 0, 0},
              {0.5, -0.5, 0.5, -0.5},
              {-0.5, 0.5, -0.5, 0.5},
              {0.5, 0.5, -0.5, -0.5},
              {-0.5, -0.5, 0.5, 0.5}};
          deltas.push_back({-0.5 * grad_sign[0], -0.5 * grad_sign[1],
                            -0.5 * grad_sign[2], -0.5 * grad_sign[3]});
          deltas.push_back({0.5 * grad_sign[0], 0.5 * grad_sign[1],
                            0.5 * grad_sign[2], 0.5 * grad_sign[3]});
          for (const auto& d : deltas) {
            auto xp = x;
            for (int j = 0; j < 4; ++j) xp[static_cast<size_t>(j)] += d[static_cast<size_t>(j)];
            try {
              const auto rec = recover_theta(xp, probe);
              if (std::abs(rec.theta - theta) > 0.5) {
                ok = false;
                break;
              }
            } catch (const SolverError&) {
              ok = false;
              break;
            }
          }
        }
        if (!ok) break;
      }
      if (!ok) break;
    }
    if (ok) return 4.0 * r0;  // headroom over the first passing magnitude
  }
  return 1.2e7;
}

}  // namespace

EkConstants compute_ek_constants(const EkDomain& domain, double beta_max_abs) {
  EkConstants c;
  c.R0 = determine_recovery_radius(domain);

  // C3: largest finite-difference |dG/dx_j| over a sampled slice of the
  // admissible domain (G = the y3 component of the recovery).
  double c3 = 0.0;
  const double h = 1e-5;
  for (int mi = 0; mi < 4; ++mi) {
    const double modulus = domain.a + (domain.b - domain.a) * (mi + 0.5) / 4.0;
    for (int ai = 0; ai < 6; ++ai) {
      const double angle =
          std::asin(std::min(1.0, domain.im_min / modulus)) +
          (kPi - 2 * std::asin(std::min(1.0, domain.im_min / modulus))) * (ai + 0.5) / 6.0;
      const Complex theta = modulus * Complex(std::cos(angle), std::sin(angle));
      for (double zmod : {1.0, 2.0, 8.0}) {
        for (int zi = 0; zi < 4; ++zi) {
          const double za = kTwoPi * (zi + 0.125) / 4.0;
          const Complex z0 = c.R0 * zmod * Complex(std::cos(za), std::sin(za));
          std::array<double, 4> x{};
          Complex p = 1.0;
          for (int j = 0; j < 4; ++j) {
            x[static_cast<size_t>(j)] = (p * z0).real();
            p *= theta;
          }
          double base_y3;
          try {
            base_y3 = recover_theta(x, domain).y3;
          } catch (const SolverError&) {
            continue;
          }
          for (int j = 0; j < 4; ++j) {
            auto xp = x;
            xp[static_cast<size_t>(j)] += h;
            try {
              const double y3p = recover_theta(xp, domain).y3;
              c3 = std::max(c3, std::abs(y3p - base_y3) / h);
            } catch (const SolverError&) {
            }
          }
        }
      }
    }
  }
  c.C3 = c3 * 1.25;  // measured maximum plus headroom
  c.C4 = (1.0 + 3.0 * domain.b) * (1.0 + 8.0 * c.C3);

  const double growth = std::exp(kPi + 1.0) * (domain.b + 1.0);
  c.C5 = 2.0 / (1.0 + domain.a) * std::pow(growth, 5.0);
  c.C6 = std::pow(growth, beta_max_abs);
  c.C7 = (4.0 * c.C3 + 2.0) + 2.0 * std::pow(domain.b, 6.0) * c.C4 * c.C5;
  c.C8 = std::max(domain.b, c.C6);

  const double la = std::log(domain.a);
  c.n1 = static_cast<int>(std::ceil(std::log(c.R0) / (5.0 * la)));
  c.n2 = std::max(c.n1, static_cast<int>(std::ceil(std::log(1.0 + 4.0 * c.C3) / (5.0 * la))));
  const double margin =
      std::min({(domain.a - 1.0) / 2.0, 1.0, domain.im_min / 2.0});
  c.n3 = std::max(c.n2, static_cast<int>(std::ceil(
                            std::log(c.C4 / (2.0 * margin)) / (5.0 * la))));
  return c;
}

// ---- EK trace --------------------------------------------------------------------

Complex EkTrace::beta_sum(const std::vector<int>& word) const {
  Complex s = 0.0;
  for (int v : word) {
    if (v < 1 || v > static_cast<int>(betas.size()))
      throw std::out_of_range("block symbol outside beta table");
    s += betas[static_cast<size_t>(v - 1)];
  }
  return s;
}

EkTrace ek_trace(Complex theta, const std::vector<Complex>& betas,
                 const std::vector<std::vector<int>>& blocks, Complex tau, int M,
                 const EkDomain& domain) {
  EkTrace trace;
  trace.theta = theta;
  trace.betas = betas;
  trace.blocks = blocks;
  trace.tau = tau;
  trace.M = M;
  trace.domain = domain;

  if (betas.empty() || std::abs(betas[0] - Complex(1.0, 0.0)) > 1e-15)
    throw std::invalid_argument("beta_1 must equal 1");
  const double mod = std::abs(theta);
  if (!(theta.imag() > domain.im_min) || mod < domain.a || mod > domain.b)
    throw std::invalid_argument("theta outside A_{a,b,eta}");
  // |beta| within [log a / (log b + pi), (log b + pi) / log a]
  const double beta_lo = std::log(domain.a) / (std::log(domain.b) + kPi);
  const double beta_hi = (std::log(domain.b) + kPi) / std::log(domain.a);
  for (const auto& beta : betas) {
    const double ab = std::abs(beta);
    if (ab < beta_lo * (1 - 1e-12) || ab > beta_hi * (1 + 1e-12))
      throw std::invalid_argument("beta modulus outside the admissible band");
  }
  if (static_cast<int>(blocks.size()) < M + 1)
    throw std::invalid_argument("need at least M+1 blocks");
  for (const auto& w : blocks) {
    if (w.size() < 6) throw std::invalid_argument("each block must end with 1^5 2");
    const std::size_t n = w.size();
    for (int i = 0; i < 5; ++i)
      if (w[n - 6 + static_cast<size_t>(i)] != 1)
        throw std::invalid_argument("each block must end with 1^5 2");
    if (w[n - 1] != 2) throw std::invalid_argument("each block must end with 1^5 2");
  }

  trace.theta2 = complex_power(theta, betas.size() > 1 ? betas[1] : Complex(1, 0));

  // Theta_n^{(M)} = theta^{beta(W_M ... W_{M-n+1})}
  trace.theta_powers.assign(static_cast<size_t>(M) + 1, Complex(1.0, 0.0));
  Complex bsum = 0.0;
  for (int n = 1; n <= M; ++n) {
    bsum += trace.beta_sum(blocks[static_cast<size_t>(M - n)]);
    trace.theta_powers[static_cast<size_t>(n)] = complex_power(theta, bsum);
  }

  const double tau_cap = std::abs(complex_power(
      theta, trace.beta_sum(blocks[static_cast<size_t>(M)])));  // |Theta_1^{(M+1)}|
  const double tau_mod = std::abs(tau);
  if (tau_mod < 1.0 - 1e-12 || tau_mod > tau_cap * (1.0 + 1e-12))
    throw std::domain_error("|tau| outside [1, |Theta_1^{(M+1)}|]");

  trace.K.assign(static_cast<size_t>(M), {});
  trace.eps.assign(static_cast<size_t>(M), {});
  for (int n = 0; n < M; ++n) {
    Complex base = trace.theta_powers[static_cast<size_t>(n)] * trace.theta2 * tau;
    for (int j = 1; j <= 5; ++j) {
      base *= theta;  // theta^j accumulated
      const double value = base.real();
      if (std::abs(value) > 4.5e15)
        throw std::invalid_argument(
            "trace magnitude exceeds exact-integer range; reduce M or |theta|");
      const double k = std::nearbyint(value);  // ties to even
      trace.K[static_cast<size_t>(n)][static_cast<size_t>(j - 1)] = k;
      trace.eps[static_cast<size_t>(n)][static_cast<size_t>(j - 1)] = value - k;
    }
  }
  return trace;
}

namespace {

// Y-tilde_{n,4}, Y-tilde_{n,5} from the integer rows alone (def-G).
std::pair<double, double> ek_y_tilde(const EkTrace& trace, int n) {
  const auto& K = trace.K[static_cast<size_t>(n)];
  const std::array<double, 4> x4{K[0], K[1], K[2], K[3]};
  const std::array<double, 4> x5{K[1], K[2], K[3], K[4]};
  const double y4 = recover_theta(x4, trace.domain).y3;
  const double y5 = recover_theta(x5, trace.domain).y3;
  return {y4, y5};
}

Complex ek_psi(const EkTrace& trace, int n) {
  const auto [y4, y5] = ek_y_tilde(trace, n);
  const auto& K = trace.K[static_cast<size_t>(n)];
  return Complex(K[4], y5) / Complex(K[3], y4);
}

double max_eps_row(const EkTrace& trace, int n) {
  double m = 0.0;
  for (double e : trace.eps[static_cast<size_t>(n)]) m = std::max(m, std::abs(e));
  return m;
}

void check_ek_applicable(const EkTrace& trace, int n, const EkConstants& constants) {
  const double theta_tau =
      std::abs(trace.theta_powers[static_cast<size_t>(n)]) * std::abs(trace.tau);
  const double t2 = std::abs(trace.theta2);
  const double th = std::abs(trace.theta);
  // G is applied with z0 = Theta_n theta2 theta^j tau, j = 1,2
  for (int j = 1; j <= 2; ++j)
    if (theta_tau * t2 * std::pow(th, j) < constants.R0)
      throw std::invalid_argument("row below the solver domain threshold (n too small)");
  // |K_{n,4} + i Y~| >= |Theta theta2 theta^4 tau| - 1/2 - 2 C3 >= |Theta tau|/2
  if (theta_tau * t2 * std::pow(th, 4.0) - 0.5 - 2.0 * constants.C3 <
      0.5 * theta_tau)
    throw std::invalid_argument("denominator bound not yet valid at this n");
}

}  // namespace

ThetaApproxResult theta_approximation_error(const EkTrace& trace, int n,
                                            const EkConstants& constants) {
  if (n < 0 || n >= trace.M) throw std::invalid_argument("row index outside [0,M)");
  check_ek_applicable(trace, n, constants);
  ThetaApproxResult res;
  res.error = std::abs(trace.theta - ek_psi(trace, n));
  const double theta_tau =
      std::abs(trace.theta_powers[static_cast<size_t>(n)]) * std::abs(trace.tau);
  res.bound = constants.C4 / theta_tau * max_eps_row(trace, n);
  res.holds = res.error <= res.bound + 1e-9;
  return res;
}

EkStepResult ek_step_uniqueness(const EkTrace& trace, int n, const EkConstants& constants) {
  if (n < 0 || n + 1 >= trace.M)
    throw std::invalid_argument("successor step needs rows n and n+1");
  check_ek_applicable(trace, n, constants);

  EkStepResult res;
  const auto& block = trace.blocks[static_cast<size_t>(trace.M - n - 1)];  // W_{M-n}
  res.B_n = constants.C7 * std::pow(constants.C8, static_cast<double>(block.size()));
  res.rho_n = 0.5 / res.B_n;
  res.max_eps = std::max(max_eps_row(trace, n), max_eps_row(trace, n + 1));

  const auto [y4, y5] = ek_y_tilde(trace, n);
  const Complex psi = Complex(trace.K[static_cast<size_t>(n)][4], y5) /
                      Complex(trace.K[static_cast<size_t>(n)][3], y4);
  const Complex anchor(trace.K[static_cast<size_t>(n)][4], y5);
  const Complex beta_w = trace.beta_sum(block);

  res.unique = true;
  res.predicted_match = true;
  for (int j = 1; j <= 5; ++j) {
    const Complex s = beta_w + Complex(j - 5, 0);
    const double center = (complex_power(psi, s) * anchor).real();
    // slack for the float evaluation of the center, relative to magnitude
    const double pad = std::max(1e-9, 4e-12 * std::abs(center));
    res.center_uncertainty = std::max(res.center_uncertainty, pad);
    const double radius = res.B_n * res.max_eps + pad;
    const double count =
        std::floor(center + radius) - std::ceil(center - radius) + 1.0;
    res.max_candidates = std::max(res.max_candidates, count);
    if (count != 1.0) res.unique = false;
    if (std::nearbyint(center) != trace.K[static_cast<size_t>(n) + 1][static_cast<size_t>(j - 1)])
      res.predicted_match = false;
  }
  return res;
}

std::pair<double, double> ek_chain_products(const EkTrace& trace, double c1) {
  // block form: factors from the stored remainders
  double block_form = 1.0;
  for (int n = 0; n < trace.M; ++n)
    for (int j = 0; j < 5; ++j) {
      const double e = std::abs(trace.eps[static_cast<size_t>(n)][static_cast<size_t>(j)]);
      block_form *= 1.0 - c1 * e * e;
    }

  // prefix form: || Re(lambda_{W_1..W_{n-1} W'_n} theta^{-j} conj(xi)) ||,
  // with conj(xi) = Theta^{(M)} tau and lambda_v = theta^{-beta(v)}
  Complex full_sum = 0.0;
  for (int i = 0; i < trace.M; ++i)
    full_sum += trace.beta_sum(trace.blocks[static_cast<size_t>(i)]);
  const Complex xi_bar = complex_power(trace.theta, full_sum) * trace.tau;

  double prefix_form = 1.0;
  Complex prefix_beta = 0.0;
  for (int n = 1; n <= trace.M; ++n) {
    const auto& w = trace.blocks[static_cast<size_t>(n - 1)];
    const std::vector<int> w_core(w.begin(), w.end() - 6);  // strip 1^5 2
    const Complex beta_here = prefix_beta + trace.beta_sum(w_core);
    for (int j = 0; j <= 4; ++j) {
      const Complex lam =
          complex_power(trace.theta, -(beta_here + Complex(j, 0)));
      const double arg = dist_to_nearest_int((lam * xi_bar).real());
      prefix_form *= 1.0 - c1 * arg * arg;
    }
    prefix_beta += trace.beta_sum(w);
  }
  return {prefix_form, block_form};
}

// ---- bad set scan -----------------------------------------------------------------

BadSetReport bad_set_scan(const std::vector<std::vector<int>>& blocks,
                          const std::vector<Complex>& betas, const BadSetParams& params) {
  const int M = params.M;
  if (static_cast<int>(blocks.size()) < M + 1)
    throw std::invalid_argument("need at least M+1 blocks");
  const EkDomain& dom = params.domain;

  // per-block beta sums and their suffix cumulative sums:
  // Theta_n = theta^{beta(W_M) + ... + beta(W_{M-n+1})}
  auto beta_of = [&](const std::vector<int>& w) {
    Complex s = 0.0;
    for (int v : w) s += betas.at(static_cast<size_t>(v - 1));
    return s;
  };
  std::vector<Complex> cumulative(static_cast<size_t>(M) + 1, Complex(0, 0));
  for (int n = 1; n <= M; ++n)
    cumulative[static_cast<size_t>(n)] =
        cumulative[static_cast<size_t>(n) - 1] + beta_of(blocks[static_cast<size_t>(M - n)]);
  const Complex beta_tail = beta_of(blocks[static_cast<size_t>(M)]);

  BadSetReport report;
  report.grid_re = params.grid_re;
  report.grid_im = params.grid_im;
  report.cells.assign(static_cast<size_t>(params.grid_re) * params.grid_im, {});
  report.ball_radius_target = std::pow(dom.a, -static_cast<double>(M));
  report.ball_count_target = std::pow(dom.a, params.alpha * M);

  const double re_lo = -dom.b, re_hi = dom.b;
  const double im_lo = dom.im_min, im_hi = dom.b;
  const double min_count = params.delta * M;
  const int need_scales = static_cast<int>(std::ceil(min_count));

  std::atomic<int> next_row{0};
  std::atomic<std::size_t> domain_cells{0}, resolved_cells{0}, bad_cells{0};
  auto worker = [&]() {
    std::vector<Complex> theta_pows(static_cast<size_t>(M) + 1);
    std::vector<Complex> coeff(static_cast<size_t>(M) * 5);
    std::vector<double> coeff_mag(static_cast<size_t>(M));
    for (;;) {
      const int row = next_row.fetch_add(1);
      if (row >= params.grid_im) break;
      const double im = im_lo + (im_hi - im_lo) * (row + 0.5) / params.grid_im;
      for (int col = 0; col < params.grid_re; ++col) {
        const double re = re_lo + (re_hi - re_lo) * (col + 0.5) / params.grid_re;
        BadSetCell& cell = report.cells[static_cast<size_t>(row) * params.grid_re + col];
        cell.re = re;
        cell.im = im;
        const Complex theta(re, im);
        const double mod = std::abs(theta);
        cell.in_domain = mod >= dom.a && mod <= dom.b && im > dom.im_min;
        if (!cell.in_domain) continue;
        domain_cells.fetch_add(1);

        const Complex log_theta = std::log(theta);
        for (int n = 0; n <= M; ++n)
          theta_pows[static_cast<size_t>(n)] =
              std::exp(cumulative[static_cast<size_t>(n)] * log_theta);
        const Complex theta2 =
            std::exp((betas.size() > 1 ? betas[1] : Complex(1, 0)) * log_theta);
        for (int n = 0; n < M; ++n) {
          Complex base = theta_pows[static_cast<size_t>(n)] * theta2;
          double mag = 0.0;
          for (int j = 1; j <= 5; ++j) {
            base *= theta;
            coeff[static_cast<size_t>(n) * 5 + static_cast<size_t>(j - 1)] = base;
            mag = std::max(mag, std::abs(base));
          }
          coeff_mag[static_cast<size_t>(n)] = mag;
        }
        const double tau_cap = std::max(1.0, std::abs(std::exp(beta_tail * log_theta)));

        // a scale is usable for a given tau only while its magnitude stays
        // within fractional-part resolution; a sampled tau certifies "not
        // bad" when enough usable scales exceed rho
        bool certified = false;
        int max_count = 0, best_usable = 0;
        for (int mi = 0; mi < params.tau_moduli && !certified; ++mi) {
          const double tmod =
              std::exp(std::log(tau_cap) * (mi + 0.5) / params.tau_moduli);
          for (int ai = 0; ai < params.tau_angles && !certified; ++ai) {
            const double ang = kTwoPi * (ai + 0.5) / params.tau_angles;
            const Complex tau = tmod * Complex(std::cos(ang), std::sin(ang));
            int count = 0, usable = 0;
            for (int n = 0; n < M; ++n) {
              if (coeff_mag[static_cast<size_t>(n)] * tmod > params.value_cap) continue;
              ++usable;
              for (int j = 0; j < 5; ++j) {
                const Complex& c =
                    coeff[static_cast<size_t>(n) * 5 + static_cast<size_t>(j)];
                const double v = c.real() * tau.real() - c.imag() * tau.imag();
                if (dist_to_nearest_int(v) >= params.rho) {
                  ++count;
                  break;
                }
              }
            }
            best_usable = std::max(best_usable, usable);
            max_count = std::max(max_count, count);
            if (count >= min_count) certified = true;
          }
        }
        cell.exceed_count = max_count;
        cell.resolved = certified || best_usable >= need_scales;
        cell.bad = cell.resolved && !certified;
        if (cell.resolved) resolved_cells.fetch_add(1);
        if (cell.bad) bad_cells.fetch_add(1);
      }
    }
  };

  const int threads = thread_count(params.threads);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  report.domain_cells = domain_cells.load();
  report.resolved_cells = resolved_cells.load();
  report.bad_cells = bad_cells.load();
  report.bad_fraction = report.resolved_cells
                            ? static_cast<double>(report.bad_cells) / report.resolved_cells
                            : 0.0;
  return report;
}

std::vector<std::vector<int>> draw_ek_blocks(const std::vector<double>& marginal,
                                             std::uint64_t seed, int count,
                                             std::size_t max_symbols) {
  if (marginal.size() < 2) throw std::invalid_argument("need at least two symbols");
  Rng rng(seed);
  std::vector<std::vector<int>> blocks;
  std::vector<int> current;
  std::size_t total = 0;
  const int pattern[6] = {1, 1, 1, 1, 1, 2};
  while (static_cast<int>(blocks.size()) < count) {
    if (++total > max_symbols)
      throw BudgetError("block draw exceeded the symbol budget");
    const double u = rng.next_double();
    double acc = 0.0;
    int sym = static_cast<int>(marginal.size());
    for (std::size_t i = 0; i < marginal.size(); ++i) {
      acc += marginal[i];
      if (u < acc) {
        sym = static_cast<int>(i) + 1;
        break;
      }
    }
    current.push_back(std::min(sym, static_cast<int>(marginal.size())));
    if (current.size() >= 6) {
      bool match = true;
      for (int i = 0; i < 6; ++i)
        if (current[current.size() - 6 + static_cast<size_t>(i)] != pattern[i]) {
          match = false;
          break;
        }
      if (match) {
        blocks.push_back(current);
        current.clear();
      }
    }
  }
  return blocks;
}

std::vector<std::vector<int>> compact_ek_blocks(std::uint64_t seed, int count,
                                                int max_core_len, int symbols) {
  if (symbols < 2) throw std::invalid_argument("need at least two symbols");
  Rng rng(seed);
  std::vector<std::vector<int>> blocks;
  blocks.reserve(static_cast<size_t>(count));
  const std::vector<int> pattern{1, 1, 1, 1, 1, 2};
  while (static_cast<int>(blocks.size()) < count) {
    const int core = static_cast<int>(rng.next_below(static_cast<uint64_t>(max_core_len) + 1));
    std::vector<int> w;
    for (int i = 0; i < core; ++i)
      w.push_back(1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(symbols))));
    w.insert(w.end(), pattern.begin(), pattern.end());
    // cores shorter than the pattern cannot contain it, so the terminator
    // occurrence is unique; longer cores are rejected if they collide
    bool clean = true;
    for (std::size_t i = 0; i + 6 < w.size(); ++i)
      if (std::equal(pattern.begin(), pattern.end(), w.begin() + static_cast<long>(i))) {
        clean = false;
        break;
      }
    if (clean) blocks.push_back(std::move(w));
  }
  return blocks;
}

}  // namespace ssm

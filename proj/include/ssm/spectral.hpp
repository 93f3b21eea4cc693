#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ssm/model.hpp"

namespace ssm {

// mu-hat(xi) = sum w_a exp(2 pi i Re(a conj(xi))).
Complex fourier_at(const DiscreteMeasure& mu, Complex xi);
std::vector<Complex> fourier(const DiscreteMeasure& mu, const std::vector<Complex>& xis);

// ---- decay exponent ---------------------------------------------------------

struct DecayBand {
  int j = 0;               // band [2^j, 2^{j+1})
  double center = 0.0;     // geometric center
  double envelope = 0.0;   // max |mu-hat| over band samples
  bool floor_flagged = false;
};

struct DecayFitReport {
  std::vector<DecayBand> bands;
  double sigma = 0.0;               // -slope of log envelope vs log center
  double intercept = 0.0;           // log2 envelope at log2 |xi| = 0
  std::vector<double> residuals;    // per unflagged band
  double atom_floor_frequency = 0.0;

  double fitted_envelope(double center) const;
};

// Envelope of |mu-hat| over dyadic bands j in [j_min, j_max], sampled at
// log-spaced moduli along the given directions. Bands beyond the atom
// spacing floor are flagged and excluded from the fit.
DecayFitReport decay_exponent(const DiscreteMeasure& mu, int j_min, int j_max,
                              int samples_per_band = 64,
                              const std::vector<double>& angles = {0.0});

// ---- the 1-branch product upper bound ----------------------------------------

struct ProductBoundResult {
  double bound = 1.0;
  double c1 = 0.0;
  std::vector<double> factor_args;  // ||Re(lambda-prefix conj(xi))|| per special step
};

// Upper bound prod_{n: omega_n = special} (1 - c1 ||Re(lambda_{omega_1}
// ... lambda_{omega_{n-1}} conj(xi))||^2) with the elementary constant
// c1 = 4 p_min^2 / p_max computed from the first two branch weights of
// the special system. Requires the normalization t_1 = 0, t_2 = 1.
ProductBoundResult product_bound(const Model& model, const std::vector<int>& omega,
                                 int special_index, Complex xi);

// ---- Erdos-Kahane machinery ---------------------------------------------------

// Parameter domain H = A_{a,b,eta} x [p_min, p_max].
struct EkDomain {
  double a = 1.1;
  double b = 2.0;
  double im_min = 0.05;
  double p_min = 0.05;
  double p_max = 0.95;
};

// Effective constants for the EK estimates, computed from the explicit
// inequalities rather than existence arguments; C3 is measured as the
// largest finite-difference derivative of the recovery solver over a
// sampled domain. Documented as computed, not canonical.
struct EkConstants {
  double R0 = 10.0;
  double C3 = 0.0;
  double C4 = 0.0;  // (1+3b)(1+8 C3)
  double C5 = 0.0;
  double C6 = 0.0;  // per-symbol growth of |d z^s / dz|
  double C7 = 0.0;
  double C8 = 0.0;
  int n1 = 0;  // |Theta_n| >= R0 from here on
  int n2 = 0;  // denominator bound valid
  int n3 = 0;  // power-difference estimate valid
};

EkConstants compute_ek_constants(const EkDomain& domain, double beta_max_abs);

// Solves x_j = Re(theta^{j-3} (x_3 + i y_3)), j = 0,1,2 for (theta, y_3)
// with Im(theta) > 0 by damped Newton from a multi-start grid over the
// domain annulus. Residual below 1e-9 or SolverError.
struct ThetaRecovery {
  Complex theta;
  double y3 = 0.0;
  double residual = 0.0;
};
ThetaRecovery recover_theta(const std::array<double, 4>& x, const EkDomain& domain);

// One Erdos-Kahane bookkeeping state: blocks W_1..W_{M+1} over {1..N}
// (each ending 1^5 2), K/eps arrays for n in [0,M), j in [1,5], and the
// Theta_n^{(M)} products.
struct EkTrace {
  Complex theta;
  std::vector<Complex> betas;               // per symbol, betas[0] = 1
  std::vector<std::vector<int>> blocks;     // W_1..W_{M+1}
  Complex tau;
  int M = 0;
  EkDomain domain;
  std::vector<std::array<double, 5>> K;     // integer-valued
  std::vector<std::array<double, 5>> eps;   // |eps| <= 1/2
  std::vector<Complex> theta_powers;        // Theta_n^{(M)}, n in [0, M]
  Complex theta2;                           // theta^{beta_2}

  Complex beta_sum(const std::vector<int>& word) const;
};

EkTrace ek_trace(Complex theta, const std::vector<Complex>& betas,
                 const std::vector<std::vector<int>>& blocks, Complex tau, int M,
                 const EkDomain& domain);

// |theta - Psi(K_{n,1..5})| against the bound C4 |Theta_n tau|^-1 max|eps|.
struct ThetaApproxResult {
  double error = 0.0;
  double bound = 0.0;
  bool holds = false;  // error <= bound + numerical floor
};
ThetaApproxResult theta_approximation_error(const EkTrace& trace, int n,
                                            const EkConstants& constants);

// Successor-step analysis at n: the interval |K_{n+1,j} - center_j| <=
// B_n max|eps| contains every admissible integer candidate.
struct EkStepResult {
  bool unique = false;           // single candidate for every j
  bool predicted_match = false;  // rounded centers equal the actual K_{n+1,j}
  double max_candidates = 0.0;   // worst-case candidate count over j
  double B_n = 0.0;
  double rho_n = 0.0;
  double max_eps = 0.0;            // over rows n and n+1
  double center_uncertainty = 0.0; // float slack of the predicted centers;
                                   // uniqueness is certifiable only below 1/2
};
EkStepResult ek_step_uniqueness(const EkTrace& trace, int n, const EkConstants& constants);

// The two block-product expressions for the Fourier bound evaluated on a
// matched trace; they agree up to rounding.
std::pair<double, double> ek_chain_products(const EkTrace& trace, double c1);

// ---- bad set scan ---------------------------------------------------------------

struct BadSetParams {
  EkDomain domain;
  double rho = 0.1;
  double delta = 0.2;
  int M = 8;
  int grid_re = 200;
  int grid_im = 200;
  int tau_moduli = 64;
  int tau_angles = 32;
  double alpha = 1.0;  // covering-target exponent for the report
  int threads = 0;     // 0 = SSM_LAB_THREADS or hardware
  // scales whose magnitude exceeds this are beyond the resolution of
  // double-precision fractional parts and are skipped
  double value_cap = 1e13;
};

struct BadSetCell {
  double re = 0.0, im = 0.0;
  bool in_domain = false;
  bool resolved = false;  // some sampled tau had >= ceil(delta M) usable scales
  bool bad = false;
  int exceed_count = 0;  // max over sampled tau of #{n : max_j ||...|| >= rho}
};

struct BadSetReport {
  std::vector<BadSetCell> cells;  // row-major, grid_im rows x grid_re cols
  int grid_re = 0, grid_im = 0;
  std::size_t domain_cells = 0, resolved_cells = 0, bad_cells = 0;
  double bad_fraction = 0.0;        // bad / resolved
  double ball_radius_target = 0.0;  // a^-M
  double ball_count_target = 0.0;   // a^{alpha M}
};

BadSetReport bad_set_scan(const std::vector<std::vector<int>>& blocks,
                          const std::vector<Complex>& betas, const BadSetParams& params);

// Draws omega symbols (0-based) from a Bernoulli marginal until `count`
// blocks ending in 1^5 2 are complete. Symbols are 1-based in the result
// to match the EK block convention.
std::vector<std::vector<int>> draw_ek_blocks(const std::vector<double>& marginal,
                                             std::uint64_t seed, int count,
                                             std::size_t max_symbols = 1'000'000);

// Seeded blocks with bounded cores: each block is W' 1^5 2 with W' a
// pattern-free word of length <= max_core_len over {1..symbols}. Keeps
// |Theta_n| within floating-point integer resolution at usable depths M.
std::vector<std::vector<int>> compact_ek_blocks(std::uint64_t seed, int count,
                                                int max_core_len = 4, int symbols = 2);

}  // namespace ssm

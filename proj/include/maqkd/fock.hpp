#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

// Exact multi-mode Fock-space density-matrix engine. States live on a
// truncated occupation basis with a per-mode photon cutoff and an optional
// bound on the total photon number. With max_total == n_modes * cutoff the
// basis is the plain tensor-product basis; a tighter bound keeps the
// dimension manageable for circuits whose total photon budget is known.
namespace maqkd::fock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Occupation = std::vector<int>;

class FockError : public std::runtime_error {
 public:
  explicit FockError(const std::string& what) : std::runtime_error(what) {}
};

// Hard cap on the basis dimension; exceeding it signals an infeasible
// configuration rather than an attempt to allocate a huge dense matrix.
inline constexpr int kDefaultDimensionLimit = 8192;

// Enumerates occupation vectors (n_0, ..., n_{m-1}) with n_i <= cutoff and
// sum n_i <= max_total, in lexicographic order (mode 0 most significant).
// For the unrestricted case this ordering coincides with the usual
// tensor-product index.
class FockBasis {
 public:
  FockBasis(int n_modes, int cutoff, int max_total = -1,
            int dim_limit = kDefaultDimensionLimit);

  int n_modes() const { return n_modes_; }
  int cutoff() const { return cutoff_; }
  int max_total() const { return max_total_; }
  int dim() const { return static_cast<int>(states_.size()); }

  const Occupation& occupation(int index) const { return states_[index]; }
  // Returns -1 when the occupation is outside the basis.
  int index(const Occupation& occ) const;

  bool same_shape(const FockBasis& other) const {
    return n_modes_ == other.n_modes_ && cutoff_ == other.cutoff_ &&
           max_total_ == other.max_total_;
  }

 private:
  static std::uint64_t pack(const Occupation& occ);

  int n_modes_;
  int cutoff_;
  int max_total_;
  std::vector<Occupation> states_;
  std::unordered_map<std::uint64_t, int> lookup_;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

// Threshold (non-photon-number-resolving) detector.
struct DetectorModel {
  double efficiency = 1.0;   // eta_D
  double dark_prob = 0.0;    // d_c per gated pulse
  double dead_time = 0.0;    // tau_M, seconds (bookkeeping only)
};

enum class Outcome { NoClick, Click };

// Immutable multi-mode density operator; possibly subnormalized, in which
// case the trace carries the probability of the conditioning events.
class DensityMatrix {
 public:
  DensityMatrix(BasisPtr basis, Matrix amplitudes,
                std::vector<std::string> mode_labels = {});

  int n_modes() const { return basis_->n_modes(); }
  int cutoff() const { return basis_->cutoff(); }
  int dim() const { return basis_->dim(); }
  const FockBasis& basis() const { return *basis_; }
  BasisPtr basis_ptr() const { return basis_; }
  const Matrix& amplitudes() const { return rho_; }
  const std::vector<std::string>& mode_labels() const { return labels_; }

  double trace() const { return rho_.trace().real(); }
  Complex element(const Occupation& bra, const Occupation& ket) const;
  // Diagonal population of a single occupation.
  double population(const Occupation& occ) const;

  // Diagnostics (never mutate the stored state).
  double hermiticity_error() const;
  double min_eigenvalue() const;

 private:
  BasisPtr basis_;
  Matrix rho_;
  std::vector<std::string> labels_;
};

DensityMatrix vacuum_state(int n_modes, int cutoff, int max_total = -1,
                           int dim_limit = kDefaultDimensionLimit);

// Builds |psi><psi| from occupation amplitudes (normalization is the
// caller's business).
DensityMatrix pure_state(int n_modes, int cutoff,
                         const std::vector<std::pair<Occupation, Complex>>& amps,
                         int max_total = -1);

DensityMatrix inject_fock(const DensityMatrix& state, int mode, int n);

// Convention on creation operators:
//   a_i^dag -> sqrt(1-r) a_i^dag + sqrt(r) a_j^dag
//   a_j^dag -> sqrt(r) a_i^dag - sqrt(1-r) a_j^dag
// Errors out if the redistribution could leave the truncated basis.
DensityMatrix apply_beam_splitter(const DensityMatrix& state, int mode_i,
                                  int mode_j, double reflectivity);

// Pure-loss channel: beam-splitter coupling to a vacuum ancilla that is
// traced out, realized as a Kraus sum.
DensityMatrix apply_loss(const DensityMatrix& state, int mode,
                         double transmissivity);

// POVM: E_noclick = (1 - d_c) (1 - eta_D)^n, E_click = I - E_noclick.
// Returns the outcome probability and the subnormalized post-measurement
// state with the measured mode traced out.
std::pair<double, DensityMatrix> measure_threshold(const DensityMatrix& state,
                                                   int mode,
                                                   const DetectorModel& det,
                                                   Outcome outcome);

// Outcome probability without constructing the post-measurement state
// (usable on the last remaining mode).
double threshold_probability(const DensityMatrix& state, int mode,
                             const DetectorModel& det, Outcome outcome);

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b,
                     int max_total = -1,
                     int dim_limit = kDefaultDimensionLimit);

// Traces out the listed modes (indices into the current mode order).
DensityMatrix partial_trace(const DensityMatrix& state,
                            const std::vector<int>& modes);

// new mode k holds what old mode perm[k] held.
DensityMatrix permute_modes(const DensityMatrix& state,
                            const std::vector<int>& perm);

// Largest total photon number carried by any basis state with weight above
// tol (0 for states with no support at all).
int support_max_photons(const DensityMatrix& state, double tol = 1e-14);

// Re-expresses the state on a basis with the given cutoff and total-photon
// bound. Support falling outside the new basis above tol is an error.
DensityMatrix rebase(const DensityMatrix& state, int cutoff, int max_total,
                     double tol = 1e-14,
                     int dim_limit = kDefaultDimensionLimit);

}  // namespace maqkd::fock

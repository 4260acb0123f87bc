#include "maqkd/fock.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace maqkd::fock {
namespace {

constexpr int kBitsPerMode = 6;
constexpr int kMaxModes = 10;
constexpr double kSupportTol = 1e-14;

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double log_factorial(int n) { return std::lgamma(n + 1.0); }

// Amplitudes <p, S-p| U |m, n> for the beam-splitter convention
//   a^dag -> c a^dag + s b^dag,  b^dag -> s a^dag - c b^dag.
std::vector<double> bs_out_amplitudes(int m, int n, double c, double s) {
  const int S = m + n;
  std::vector<double> amp(S + 1, 0.0);
  for (int k = 0; k <= m; ++k) {
    for (int l = 0; l <= n; ++l) {
      const int p = k + l;
      amp[p] += binom(m, k) * binom(n, l) * std::pow(c, k) *
                std::pow(s, m - k) * std::pow(s, l) * std::pow(-c, n - l);
    }
  }
  for (int p = 0; p <= S; ++p) {
    const double lognorm = 0.5 * (log_factorial(p) + log_factorial(S - p) -
                                  log_factorial(m) - log_factorial(n));
    amp[p] *= std::exp(lognorm);
  }
  return amp;
}

std::vector<std::string> default_labels(int n) {
  std::vector<std::string> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = "m" + std::to_string(i);
  return labels;
}

// Basis indices whose row or column carries weight above tolerance.
std::vector<int> support(const Matrix& rho) {
  std::vector<int> out;
  for (int i = 0; i < rho.rows(); ++i) {
    if (rho.row(i).cwiseAbs().maxCoeff() > kSupportTol ||
        rho.col(i).cwiseAbs().maxCoeff() > kSupportTol) {
      out.push_back(i);
    }
  }
  return out;
}

}  // namespace

FockBasis::FockBasis(int n_modes, int cutoff, int max_total, int dim_limit)
    : n_modes_(n_modes), cutoff_(cutoff) {
  if (n_modes < 1) throw FockError("FockBasis: need at least one mode");
  if (n_modes > kMaxModes) throw FockError("FockBasis: too many modes");
  if (cutoff < 0 || cutoff >= (1 << kBitsPerMode))
    throw FockError("FockBasis: cutoff out of range");
  max_total_ = (max_total < 0) ? n_modes * cutoff
                               : std::min(max_total, n_modes * cutoff);

  Occupation occ(n_modes, 0);
  int total = 0;
  // Lexicographic enumeration, mode 0 most significant.
  std::vector<int> stack;
  std::function<void(int)> rec = [&](int mode) {
    if (mode == n_modes) {
      states_.push_back(occ);
      return;
    }
    for (int n = 0; n <= cutoff && total + n <= max_total_; ++n) {
      occ[mode] = n;
      total += n;
      rec(mode + 1);
      total -= n;
      occ[mode] = 0;
    }
  };
  rec(0);
  if (static_cast<long long>(states_.size()) > dim_limit)
    throw FockError("FockBasis: dimension " + std::to_string(states_.size()) +
                    " exceeds limit " + std::to_string(dim_limit));
  lookup_.reserve(states_.size() * 2);
  for (int i = 0; i < dim(); ++i) lookup_.emplace(pack(states_[i]), i);
}

std::uint64_t FockBasis::pack(const Occupation& occ) {
  std::uint64_t key = 0;
  for (int n : occ) key = (key << kBitsPerMode) | static_cast<std::uint64_t>(n);
  return key;
}

int FockBasis::index(const Occupation& occ) const {
  if (static_cast<int>(occ.size()) != n_modes_) return -1;
  for (int n : occ)
    if (n < 0 || n > cutoff_) return -1;
  auto it = lookup_.find(pack(occ));
  return it == lookup_.end() ? -1 : it->second;
}

DensityMatrix::DensityMatrix(BasisPtr basis, Matrix amplitudes,
                             std::vector<std::string> mode_labels)
    : basis_(std::move(basis)), rho_(std::move(amplitudes)),
      labels_(std::move(mode_labels)) {
  if (rho_.rows() != basis_->dim() || rho_.cols() != basis_->dim())
    throw FockError("DensityMatrix: amplitude shape does not match basis");
  if (labels_.empty()) labels_ = default_labels(basis_->n_modes());
  if (static_cast<int>(labels_.size()) != basis_->n_modes())
    throw FockError("DensityMatrix: wrong number of mode labels");
}

Complex DensityMatrix::element(const Occupation& bra,
                               const Occupation& ket) const {
  const int i = basis_->index(bra);
  const int j = basis_->index(ket);
  if (i < 0 || j < 0) return Complex(0.0, 0.0);
  return rho_(i, j);
}

double DensityMatrix::population(const Occupation& occ) const {
  const int i = basis_->index(occ);
  return i < 0 ? 0.0 : rho_(i, i).real();
}

double DensityMatrix::hermiticity_error() const {
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  Matrix h = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h,
                                               Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

DensityMatrix vacuum_state(int n_modes, int cutoff, int max_total,
                           int dim_limit) {
  if (cutoff < 1) throw FockError("vacuum_state: cutoff must be >= 1");
  auto basis =
      std::make_shared<FockBasis>(n_modes, cutoff, max_total, dim_limit);
  Matrix rho = Matrix::Zero(basis->dim(), basis->dim());
  rho(0, 0) = 1.0;
  return DensityMatrix(std::move(basis), std::move(rho));
}

DensityMatrix pure_state(
    int n_modes, int cutoff,
    const std::vector<std::pair<Occupation, Complex>>& amps, int max_total) {
  auto basis = std::make_shared<FockBasis>(n_modes, cutoff, max_total);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis->dim());
  for (const auto& [occ, a] : amps) {
    const int i = basis->index(occ);
    if (i < 0) throw FockError("pure_state: occupation outside basis");
    psi(i) += a;
  }
  Matrix rho = psi * psi.adjoint();
  return DensityMatrix(std::move(basis), std::move(rho));
}

DensityMatrix inject_fock(const DensityMatrix& state, int mode, int n) {
  const auto& basis = state.basis();
  if (mode < 0 || mode >= basis.n_modes())
    throw FockError("inject_fock: mode index out of range");
  if (n < 0 || n > basis.cutoff())
    throw FockError("inject_fock: photon number exceeds cutoff");
  const auto& rho = state.amplitudes();
  const auto live = support(rho);
  std::vector<int> mapped(basis.dim(), -1);
  for (int i : live) {
    Occupation occ = basis.occupation(i);
    if (occ[mode] != 0)
      throw FockError("inject_fock: target mode is not in vacuum");
    occ[mode] = n;
    const int j = basis.index(occ);
    if (j < 0)
      throw FockError("inject_fock: total photon number exceeds basis bound");
    mapped[i] = j;
  }
  Matrix out = Matrix::Zero(basis.dim(), basis.dim());
  for (int i : live)
    for (int j : live) out(mapped[i], mapped[j]) = rho(i, j);
  return DensityMatrix(state.basis_ptr(), std::move(out), state.mode_labels());
}

DensityMatrix apply_beam_splitter(const DensityMatrix& state, int mode_i,
                                  int mode_j, double reflectivity) {
  const auto& basis = state.basis();
  if (mode_i == mode_j || mode_i < 0 || mode_j < 0 ||
      mode_i >= basis.n_modes() || mode_j >= basis.n_modes())
    throw FockError("apply_beam_splitter: invalid mode pair");
  if (reflectivity < 0.0 || reflectivity > 1.0)
    throw FockError("apply_beam_splitter: reflectivity outside [0,1]");

  const auto& rho = state.amplitudes();
  const auto live = support(rho);
  int max_pair = 0;
  for (int i : live) {
    const auto& occ = basis.occupation(i);
    max_pair = std::max(max_pair, occ[mode_i] + occ[mode_j]);
  }
  if (max_pair > basis.cutoff())
    throw FockError(
        "apply_beam_splitter: photon redistribution would exceed the cutoff");

  const double c = std::sqrt(1.0 - reflectivity);
  const double s = std::sqrt(reflectivity);

  // U is block diagonal over (rest of the occupation, pair photon total);
  // build it column by column on the states that can appear.
  Matrix u = Matrix::Zero(basis.dim(), basis.dim());
  for (int k = 0; k < basis.dim(); ++k) {
    const auto& occ = basis.occupation(k);
    const int m = occ[mode_i];
    const int n = occ[mode_j];
    const int S = m + n;
    if (S > basis.cutoff()) {
      u(k, k) = 1.0;  // unreachable sector, never holds weight
      continue;
    }
    const auto amps = bs_out_amplitudes(m, n, c, s);
    Occupation out = occ;
    for (int p = 0; p <= S; ++p) {
      if (std::abs(amps[p]) < 1e-300) continue;
      out[mode_i] = p;
      out[mode_j] = S - p;
      const int idx = basis.index(out);
      if (idx < 0)
        throw FockError("apply_beam_splitter: basis closure violated");
      u(idx, k) = amps[p];
    }
  }
  Matrix result = u * rho * u.adjoint();
  return DensityMatrix(state.basis_ptr(), std::move(result),
                       state.mode_labels());
}

DensityMatrix apply_loss(const DensityMatrix& state, int mode,
                         double transmissivity) {
  const auto& basis = state.basis();
  if (mode < 0 || mode >= basis.n_modes())
    throw FockError("apply_loss: mode index out of range");
  if (transmissivity < 0.0 || transmissivity > 1.0)
    throw FockError("apply_loss: transmissivity outside [0,1]");

  const auto& rho = state.amplitudes();
  const double t = transmissivity;
  Matrix out = Matrix::Zero(basis.dim(), basis.dim());
  // rho' = sum_k K_k rho K_k^dag with K_k |n> = sqrt(C(n,k) t^(n-k) (1-t)^k)
  // |n-k>. K_k is a partial permutation with weights, so apply it by index
  // remapping.
  for (int k = 0; k <= basis.cutoff(); ++k) {
    std::vector<int> target(basis.dim(), -1);
    std::vector<double> weight(basis.dim(), 0.0);
    bool any = false;
    for (int i = 0; i < basis.dim(); ++i) {
      Occupation occ = basis.occupation(i);
      const int n = occ[mode];
      if (n < k) continue;
      const double w =
          std::sqrt(binom(n, k) * std::pow(t, n - k) * std::pow(1.0 - t, k));
      if (w == 0.0) continue;
      occ[mode] = n - k;
      target[i] = basis.index(occ);
      weight[i] = w;
      any = true;
    }
    if (!any) continue;
    for (int i = 0; i < basis.dim(); ++i) {
      if (target[i] < 0) continue;
      for (int j = 0; j < basis.dim(); ++j) {
        if (target[j] < 0) continue;
        const Complex v = rho(i, j);
        if (v != Complex(0.0, 0.0))
          out(target[i], target[j]) += weight[i] * weight[j] * v;
      }
    }
  }
  return DensityMatrix(state.basis_ptr(), std::move(out), state.mode_labels());
}

std::pair<double, DensityMatrix> measure_threshold(const DensityMatrix& state,
                                                   int mode,
                                                   const DetectorModel& det,
                                                   Outcome outcome) {
  const auto& basis = state.basis();
  if (mode < 0 || mode >= basis.n_modes())
    throw FockError("measure_threshold: mode index out of range");
  const auto& rho = state.amplitudes();

  Eigen::VectorXd povm(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) {
    const int n = basis.occupation(i)[mode];
    const double no_click =
        (1.0 - det.dark_prob) * std::pow(1.0 - det.efficiency, n);
    povm(i) = (outcome == Outcome::NoClick) ? no_click : 1.0 - no_click;
  }
  const double prob = (povm.array() * rho.diagonal().real().array()).sum();
  const Eigen::VectorXd root = povm.cwiseSqrt();
  Matrix conditioned = root.asDiagonal() * rho * root.asDiagonal();
  DensityMatrix full(state.basis_ptr(), std::move(conditioned),
                     state.mode_labels());
  return {prob, partial_trace(full, {mode})};
}

double threshold_probability(const DensityMatrix& state, int mode,
                             const DetectorModel& det, Outcome outcome) {
  const auto& basis = state.basis();
  if (mode < 0 || mode >= basis.n_modes())
    throw FockError("threshold_probability: mode index out of range");
  double prob = 0.0;
  const auto& rho = state.amplitudes();
  for (int i = 0; i < basis.dim(); ++i) {
    const int n = basis.occupation(i)[mode];
    const double no_click =
        (1.0 - det.dark_prob) * std::pow(1.0 - det.efficiency, n);
    const double w = (outcome == Outcome::NoClick) ? no_click : 1.0 - no_click;
    prob += w * rho(i, i).real();
  }
  return prob;
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b,
                     int max_total, int dim_limit) {
  if (a.cutoff() != b.cutoff())
    throw FockError("tensor: cutoff mismatch between factors");
  const int n = a.n_modes() + b.n_modes();
  if (max_total < 0) max_total = a.basis().max_total() + b.basis().max_total();
  auto basis =
      std::make_shared<FockBasis>(n, a.cutoff(), max_total, dim_limit);

  Matrix rho = Matrix::Zero(basis->dim(), basis->dim());
  const int da = a.dim(), db = b.dim();
  std::vector<int> combined(static_cast<size_t>(da) * db, -1);
  for (int ia = 0; ia < da; ++ia) {
    Occupation occ = a.basis().occupation(ia);
    occ.resize(n);
    for (int ib = 0; ib < db; ++ib) {
      const auto& ob = b.basis().occupation(ib);
      std::copy(ob.begin(), ob.end(), occ.begin() + a.n_modes());
      combined[static_cast<size_t>(ia) * db + ib] = basis->index(occ);
    }
  }
  const auto& ra = a.amplitudes();
  const auto& rb = b.amplitudes();
  for (int ia = 0; ia < da; ++ia)
    for (int ja = 0; ja < da; ++ja) {
      const Complex va = ra(ia, ja);
      if (va == Complex(0.0, 0.0)) continue;
      for (int ib = 0; ib < db; ++ib) {
        const int r = combined[static_cast<size_t>(ia) * db + ib];
        if (r < 0) continue;
        for (int jb = 0; jb < db; ++jb) {
          const int ccol = combined[static_cast<size_t>(ja) * db + jb];
          if (ccol < 0) continue;
          const Complex vb = rb(ib, jb);
          if (vb != Complex(0.0, 0.0)) rho(r, ccol) += va * vb;
        }
      }
    }
  std::vector<std::string> labels = a.mode_labels();
  labels.insert(labels.end(), b.mode_labels().begin(), b.mode_labels().end());
  return DensityMatrix(std::move(basis), std::move(rho), std::move(labels));
}

DensityMatrix partial_trace(const DensityMatrix& state,
                            const std::vector<int>& modes) {
  const auto& basis = state.basis();
  std::vector<bool> traced(basis.n_modes(), false);
  for (int m : modes) {
    if (m < 0 || m >= basis.n_modes() || traced[m])
      throw FockError("partial_trace: invalid mode set");
    traced[m] = true;
  }
  const int n_keep = basis.n_modes() - static_cast<int>(modes.size());
  if (n_keep == 0) throw FockError("partial_trace: cannot trace all modes");

  auto reduced = std::make_shared<FockBasis>(n_keep, basis.cutoff(),
                                             basis.max_total());
  // Group indices by the traced-part occupation; only equal traced parts
  // contribute.
  std::unordered_map<std::uint64_t, std::vector<int>> groups;
  std::vector<int> kept_index(basis.dim(), -1);
  for (int i = 0; i < basis.dim(); ++i) {
    const auto& occ = basis.occupation(i);
    Occupation keep;
    keep.reserve(n_keep);
    std::uint64_t key = 0;
    for (int m = 0; m < basis.n_modes(); ++m) {
      if (traced[m])
        key = (key << kBitsPerMode) | static_cast<std::uint64_t>(occ[m]);
      else
        keep.push_back(occ[m]);
    }
    kept_index[i] = reduced->index(keep);
    groups[key].push_back(i);
  }

  const auto& rho = state.amplitudes();
  Matrix out = Matrix::Zero(reduced->dim(), reduced->dim());
  for (const auto& [key, members] : groups) {
    (void)key;
    for (int i : members)
      for (int j : members) {
        const Complex v = rho(i, j);
        if (v != Complex(0.0, 0.0)) out(kept_index[i], kept_index[j]) += v;
      }
  }
  std::vector<std::string> labels;
  for (int m = 0; m < basis.n_modes(); ++m)
    if (!traced[m]) labels.push_back(state.mode_labels()[m]);
  return DensityMatrix(std::move(reduced), std::move(out), std::move(labels));
}

DensityMatrix permute_modes(const DensityMatrix& state,
                            const std::vector<int>& perm) {
  const auto& basis = state.basis();
  if (static_cast<int>(perm.size()) != basis.n_modes())
    throw FockError("permute_modes: permutation has wrong length");
  std::vector<bool> seen(basis.n_modes(), false);
  for (int p : perm) {
    if (p < 0 || p >= basis.n_modes() || seen[p])
      throw FockError("permute_modes: not a permutation");
    seen[p] = true;
  }
  std::vector<int> mapping(basis.dim(), -1);
  Occupation out(basis.n_modes());
  for (int i = 0; i < basis.dim(); ++i) {
    const auto& occ = basis.occupation(i);
    for (int m = 0; m < basis.n_modes(); ++m) out[m] = occ[perm[m]];
    mapping[i] = basis.index(out);
    if (mapping[i] < 0) throw FockError("permute_modes: basis not closed");
  }
  const auto& rho = state.amplitudes();
  Matrix result = Matrix::Zero(basis.dim(), basis.dim());
  for (int i = 0; i < basis.dim(); ++i)
    for (int j = 0; j < basis.dim(); ++j) {
      const Complex v = rho(i, j);
      if (v != Complex(0.0, 0.0)) result(mapping[i], mapping[j]) = v;
    }
  std::vector<std::string> labels(basis.n_modes());
  for (int m = 0; m < basis.n_modes(); ++m)
    labels[m] = state.mode_labels()[perm[m]];
  return DensityMatrix(state.basis_ptr(), std::move(result),
                       std::move(labels));
}

int support_max_photons(const DensityMatrix& state, double tol) {
  const auto& basis = state.basis();
  const auto& rho = state.amplitudes();
  int max_photons = 0;
  for (int i = 0; i < basis.dim(); ++i) {
    if (rho.row(i).cwiseAbs().maxCoeff() <= tol &&
        rho.col(i).cwiseAbs().maxCoeff() <= tol)
      continue;
    int total = 0;
    for (int n : basis.occupation(i)) total += n;
    max_photons = std::max(max_photons, total);
  }
  return max_photons;
}

DensityMatrix rebase(const DensityMatrix& state, int cutoff, int max_total,
                     double tol, int dim_limit) {
  const auto& basis = state.basis();
  auto target = std::make_shared<FockBasis>(basis.n_modes(), cutoff,
                                            max_total, dim_limit);
  std::vector<int> mapping(basis.dim(), -1);
  for (int i = 0; i < basis.dim(); ++i)
    mapping[i] = target->index(basis.occupation(i));
  const auto& rho = state.amplitudes();
  Matrix result = Matrix::Zero(target->dim(), target->dim());
  for (int i = 0; i < basis.dim(); ++i) {
    for (int j = 0; j < basis.dim(); ++j) {
      const Complex v = rho(i, j);
      if (std::abs(v) <= tol) continue;
      if (mapping[i] < 0 || mapping[j] < 0)
        throw FockError("rebase: support falls outside the target basis");
      result(mapping[i], mapping[j]) = v;
    }
  }
  return DensityMatrix(std::move(target), std::move(result),
                       state.mode_labels());
}

}  // namespace maqkd::fock

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "heom/correlation.hpp"
#include "heom/model.hpp"

namespace heom {

// Multi-index of one auxiliary density operator: a non-negative exponent per
// (site, decay mode) slot. Slots are site-major with the Drude pole at k = 0,
// so mode m couples site m/(K+1) through decay rate nu_{m mod (K+1)}.
struct AdoIndex {
  std::vector<std::uint8_t> exponents;

  int depth() const {
    int d = 0;
    for (auto e : exponents) d += e;
    return d;
  }
};

struct HierarchyBudget {
  std::size_t max_indices = 400000;
};

// Number of indices with depth <= L over M = n_sites*(K+1) modes:
// binomial(M + L, L). Throws CapacityError on overflow.
std::size_t hierarchy_size(int n_sites, int n_matsubara, int level);

// Complete enumeration of every AdoIndex with depth <= level, in canonical
// order (grouped by depth, lexicographic within each group), plus neighbor
// tables linking each index to the one with a single exponent raised or
// lowered (-1 where no neighbor exists).
struct AdoIndexSet {
  int n_sites = 0;
  int n_matsubara = 0;  // K
  int level = 0;        // L
  int n_modes = 0;      // M = n_sites*(K+1)
  std::size_t count = 0;

  std::vector<std::uint8_t> exponents;  // count x n_modes, row-major
  std::vector<std::uint8_t> depth;      // count
  std::vector<std::int32_t> plus;       // count x n_modes, -1 when absent
  std::vector<std::int32_t> minus;      // count x n_modes, -1 when absent

  std::uint8_t exponent(std::size_t id, int mode) const {
    return exponents[id * n_modes + mode];
  }
  std::int32_t up(std::size_t id, int mode) const {
    return plus[id * n_modes + mode];
  }
  std::int32_t down(std::size_t id, int mode) const {
    return minus[id * n_modes + mode];
  }
  int site_of_mode(int mode) const { return mode / (n_matsubara + 1); }
  int rate_of_mode(int mode) const { return mode % (n_matsubara + 1); }
};

AdoIndexSet build_index_set(int n_sites, int n_matsubara, int level,
                            const HierarchyBudget& budget = {});

// Propagation-ready hierarchy: the index set plus the model (Hamiltonian,
// Matsubara expansion, unit conversion) baked into flat coupling tables.
// ADOs are stored scaled so that up/down coupling magnitudes are balanced
// across depth; the zero-index ADO is the physical reduced density matrix.
class Hierarchy {
 public:
  Hierarchy(ExcitonHamiltonian h, BathSpec bath, int level,
            const HierarchyBudget& budget = {});

  const ExcitonHamiltonian& hamiltonian() const { return h_; }
  const BathSpec& bath() const { return bath_; }
  const MatsubaraExpansion& expansion() const { return expansion_; }
  const AdoIndexSet& indices() const { return idx_; }
  int n_sites() const { return h_.n_sites; }
  int level() const { return idx_.level; }
  std::size_t n_ados() const { return idx_.count; }
  // Packed state length: one column-major n_sites x n_sites block per ADO.
  std::size_t state_size() const {
    return idx_.count * static_cast<std::size_t>(n_sites()) * n_sites();
  }

  // Time derivative of the full hierarchy state, dydt = L[y], in fs^-1.
  // y and dydt are packed as state_size() complex numbers and must not alias.
  void rhs(const std::complex<double>* y, std::complex<double>* dydt) const;

 private:
  ExcitonHamiltonian h_;
  BathSpec bath_;
  MatsubaraExpansion expansion_;
  AdoIndexSet idx_;

  int block_ = 0;                  // n_sites * n_sites
  std::vector<double> h_rad_;      // Hamiltonian, col-major, rad/fs
  std::vector<double> decay_;      // per-ADO sum_m e_m nu_m, fs^-1
  double terminator_rad_ = 0.0;    // Xi, rad/fs
  // Per Matsubara rate k: sqrt(|c_k|) and c_k/sqrt(|c_k|) in fs^-1 units.
  std::vector<double> sqrt_abs_c_;
  std::vector<std::complex<double>> c_over_sqrt_;
  std::vector<double> sqrt_int_;   // sqrt(0..level+1)
};

}  // namespace heom

#include "heom/hierarchy.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <unordered_map>

#include "heom/errors.hpp"

namespace heom {

namespace {

void validate_hamiltonian(const ExcitonHamiltonian& h) {
  if (h.n_sites < 2) throw UsageError("need at least 2 sites for dynamics");
  if (h.n_sites > 64) throw UsageError("site count exceeds the supported maximum of 64");
  if (h.matrix.rows() != h.n_sites || h.matrix.cols() != h.n_sites)
    throw UsageError("Hamiltonian matrix size does not match n_sites");
  for (int i = 0; i < h.n_sites; ++i)
    for (int j = i + 1; j < h.n_sites; ++j)
      if (h.matrix(i, j) != h.matrix(j, i))
        throw UsageError("Hamiltonian matrix must be symmetric");
}

}  // namespace

std::size_t hierarchy_size(int n_sites, int n_matsubara, int level) {
  if (n_sites < 1 || n_matsubara < 0 || level < 0)
    throw UsageError("hierarchy_size needs n_sites >= 1, K >= 0, L >= 0");
  const std::size_t M = static_cast<std::size_t>(n_sites) * (n_matsubara + 1);
  // binomial(M + L, L), accumulated in 128 bits to catch overflow early.
  unsigned __int128 count = 1;
  for (int i = 1; i <= level; ++i) {
    count = count * (M + i) / i;  // exact: product of i consecutive integers
    if (count > static_cast<unsigned __int128>(1) << 62)
      throw CapacityError(static_cast<std::size_t>(-1), 0,
                          "hierarchy index count overflows: N=" + std::to_string(n_sites) +
                              " K=" + std::to_string(n_matsubara) +
                              " L=" + std::to_string(level));
  }
  return static_cast<std::size_t>(count);
}

AdoIndexSet build_index_set(int n_sites, int n_matsubara, int level,
                            const HierarchyBudget& budget) {
  if (level < 0) throw UsageError("truncation level must be >= 0");
  AdoIndexSet s;
  s.n_sites = n_sites;
  s.n_matsubara = n_matsubara;
  s.level = level;
  s.n_modes = n_sites * (n_matsubara + 1);
  s.count = hierarchy_size(n_sites, n_matsubara, level);
  if (s.count > budget.max_indices)
    throw CapacityError(s.count, budget.max_indices,
                        "hierarchy needs " + std::to_string(s.count) +
                            " auxiliary operators, over the budget of " +
                            std::to_string(budget.max_indices) +
                            "; lower L or K, or raise the budget");

  const int M = s.n_modes;
  s.exponents.reserve(s.count * M);
  s.depth.reserve(s.count);

  // Lookup from exponent vector (as raw bytes) to index id.
  std::unordered_map<std::string, std::int32_t> ids;
  ids.reserve(s.count * 2);

  // Depth groups in ascending order, lexicographic within each group.
  std::vector<std::uint8_t> vec(M, 0);
  auto emit = [&] {
    const auto id = static_cast<std::int32_t>(s.depth.size());
    s.exponents.insert(s.exponents.end(), vec.begin(), vec.end());
    int d = 0;
    for (auto e : vec) d += e;
    s.depth.push_back(static_cast<std::uint8_t>(d));
    ids.emplace(std::string(reinterpret_cast<const char*>(vec.data()), M), id);
  };
  auto enumerate = [&](auto&& self, int slot, int remaining) -> void {
    if (slot == M - 1) {
      vec[slot] = static_cast<std::uint8_t>(remaining);
      emit();
      vec[slot] = 0;
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      vec[slot] = static_cast<std::uint8_t>(e);
      self(self, slot + 1, remaining - e);
    }
    vec[slot] = 0;
  };
  for (int d = 0; d <= level; ++d) enumerate(enumerate, 0, d);

  s.plus.assign(s.count * M, -1);
  s.minus.assign(s.count * M, -1);
  std::string key(static_cast<std::size_t>(M), '\0');
  for (std::size_t id = 0; id < s.count; ++id) {
    const std::uint8_t* e = s.exponents.data() + id * M;
    std::memcpy(key.data(), e, M);
    for (int m = 0; m < M; ++m) {
      if (s.depth[id] < level) {
        key[m] = static_cast<char>(e[m] + 1);
        s.plus[id * M + m] = ids.at(key);
        key[m] = static_cast<char>(e[m]);
      }
      if (e[m] > 0) {
        key[m] = static_cast<char>(e[m] - 1);
        s.minus[id * M + m] = ids.at(key);
        key[m] = static_cast<char>(e[m]);
      }
    }
  }
  return s;
}

Hierarchy::Hierarchy(ExcitonHamiltonian h, BathSpec bath, int level,
                     const HierarchyBudget& budget)
    : h_(std::move(h)), bath_(bath) {
  validate_hamiltonian(h_);
  validate_bath(bath_);
  expansion_ = matsubara_expansion(bath_);
  idx_ = build_index_set(h_.n_sites, bath_.n_matsubara, level, budget);

  const int N = h_.n_sites;
  block_ = N * N;
  const double u = units.cm1_to_rad_per_fs;

  h_rad_.resize(block_);
  for (int j = 0; j < N; ++j)
    for (int i = 0; i < N; ++i) h_rad_[i + j * N] = h_.matrix(i, j) * u;

  terminator_rad_ = expansion_.terminator_rate * u;

  const int n_rates = expansion_.n_terms();
  sqrt_abs_c_.resize(n_rates);
  c_over_sqrt_.resize(n_rates);
  std::vector<double> nu_rad(n_rates);
  for (int k = 0; k < n_rates; ++k) {
    const std::complex<double> c_rad = expansion_.coefficients[k] * u * u;  // fs^-2
    nu_rad[k] = expansion_.rates[k] * u;                                    // fs^-1
    const double mag = std::abs(c_rad);
    sqrt_abs_c_[k] = std::sqrt(mag);
    c_over_sqrt_[k] = mag > 0.0 ? c_rad / std::sqrt(mag) : 0.0;
  }

  decay_.resize(idx_.count);
  const int M = idx_.n_modes, Kp1 = bath_.n_matsubara + 1;
  for (std::size_t id = 0; id < idx_.count; ++id) {
    double d = 0.0;
    const std::uint8_t* e = idx_.exponents.data() + id * M;
    for (int m = 0; m < M; ++m) d += e[m] * nu_rad[m % Kp1];
    decay_[id] = d;
  }

  sqrt_int_.resize(level + 2);
  for (int i = 0; i <= level + 1; ++i) sqrt_int_[i] = std::sqrt(static_cast<double>(i));
}

void Hierarchy::rhs(const std::complex<double>* y, std::complex<double>* dydt) const {
  using cplx = std::complex<double>;
  const int N = h_.n_sites;
  const int M = idx_.n_modes;
  const int Kp1 = bath_.n_matsubara + 1;
  const double* H = h_rad_.data();
  const double xi2 = 2.0 * terminator_rad_;

  std::vector<cplx> scratch(2 * N);
  cplx* hx = scratch.data();      // column of H*X
  cplx* xh = scratch.data() + N;  // column of X*H

  for (std::size_t a = 0; a < idx_.count; ++a) {
    const cplx* X = y + a * block_;
    cplx* D = dydt + a * block_;
    const double dec = decay_[a];

    // D = -i [H, X] - (sum_m e_m nu_m) X - 2 Xi * offdiag(X).
    for (int j = 0; j < N; ++j) {
      for (int i = 0; i < N; ++i) {
        hx[i] = 0.0;
        xh[i] = 0.0;
      }
      const cplx* xj = X + j * N;
      for (int k = 0; k < N; ++k) {
        const double* hcol = H + k * N;
        const cplx* xcol = X + k * N;
        const cplx xkj = xj[k];
        const double hkj = H[k + j * N];
        for (int i = 0; i < N; ++i) {
          hx[i] += hcol[i] * xkj;
          xh[i] += xcol[i] * hkj;
        }
      }
      cplx* dj = D + j * N;
      for (int i = 0; i < N; ++i) {
        const cplx t = hx[i] - xh[i];  // [H, X](i,j)
        const cplx x = xj[i];
        const double damp = dec + (i == j ? 0.0 : xi2);
        dj[i] = cplx(t.imag() - damp * x.real(), -t.real() - damp * x.imag());
      }
    }

    // Couplings through the site projectors: row n and column n updates.
    const std::uint8_t* e = idx_.exponents.data() + a * M;
    const std::int32_t* up = idx_.plus.data() + a * M;
    const std::int32_t* dn = idx_.minus.data() + a * M;
    for (int m = 0; m < M; ++m) {
      const int n = m / Kp1;
      const int k = m % Kp1;

      const std::int32_t ui = up[m];
      if (ui >= 0) {
        const double aup = sqrt_int_[e[m] + 1] * sqrt_abs_c_[k];
        if (aup != 0.0) {
          const cplx* Xp = y + static_cast<std::size_t>(ui) * block_;
          // -i aup [R_n, X+]: row n picks -i aup X+(n,j), column n +i aup X+(i,n).
          for (int j = 0; j < N; ++j) {
            const cplx v = Xp[n + j * N];
            D[n + j * N] += cplx(aup * v.imag(), -aup * v.real());
          }
          for (int i = 0; i < N; ++i) {
            const cplx v = Xp[i + n * N];
            D[i + n * N] += cplx(-aup * v.imag(), aup * v.real());
          }
        }
      }

      const std::int32_t di = dn[m];
      if (di >= 0) {
        const cplx cd = sqrt_int_[e[m]] * c_over_sqrt_[k];
        if (cd != 0.0) {
          const cplx* Xm = y + static_cast<std::size_t>(di) * block_;
          // -i sqrt(e/|c|) (c R_n X- - c* X- R_n).
          for (int j = 0; j < N; ++j) {
            const cplx v = cd * Xm[n + j * N];
            D[n + j * N] += cplx(v.imag(), -v.real());
          }
          const cplx cc = std::conj(cd);
          for (int i = 0; i < N; ++i) {
            const cplx v = cc * Xm[i + n * N];
            D[i + n * N] += cplx(-v.imag(), v.real());
          }
        }
      }
    }
  }
}

}  // namespace heom

#include "uedlab/ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "uedlab/error.hpp"
#include "uedlab/rng.hpp"

namespace ued {

double ground_cost(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InvalidArgument("ground cost between vectors of dimension " + std::to_string(a.size()) +
                          " and " + std::to_string(b.size()));
  // Four running sums let the compiler keep the loop in vector registers.
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = a.size();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    for (std::size_t l = 0; l < 4; ++l) {
      const double d = a[k + l] - b[k + l];
      s[l] += d * d;
    }
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    s[0] += d * d;
  }
  return std::sqrt((s[0] + s[1]) + (s[2] + s[3]));
}

namespace {

double powered(double d, double p) { return p == 1.0 ? d : std::pow(d, p); }

void check_exponent(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("Wasserstein exponent p must be >= 1");
}

}  // namespace

CostMatrix cost_matrix(const SampleSet& from, const SampleSet& to, double p) {
  check_exponent(p);
  if (from.dim() != to.dim()) throw InvalidArgument("sample sets have different dimensions");
  CostMatrix c;
  c.rows = from.size();
  c.cols = to.size();
  c.exponent = p;
  c.data.resize(c.rows * c.cols);
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j)
      c.data[i * c.cols + j] = powered(ground_cost(from.point(i), to.point(j)), p);
  return c;
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> out(rows, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i] += at(i, j);
  return out;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> out(cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j] += at(i, j);
  return out;
}

namespace {

// Distinct atoms of a sample set in lexicographic order, with each original
// point mapped to its atom. Zero-weight atoms are dropped from the solve.
struct Atoms {
  std::size_t dim = 0;
  std::vector<double> coords;
  std::vector<double> weights;
  std::vector<std::ptrdiff_t> atom_of;  // per original point, -1 if dropped

  std::span<const double> point(std::size_t k) const { return {coords.data() + k * dim, dim}; }
};

Atoms canonical_atoms(const SampleSet& s) {
  const std::size_t n = s.size();
  const std::size_t dim = s.dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto less_point = [&](std::size_t a, std::size_t b) {
    const auto pa = s.point(a);
    const auto pb = s.point(b);
    if (std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end())) return true;
    if (std::lexicographical_compare(pb.begin(), pb.end(), pa.begin(), pa.end())) return false;
    return s.weights()[a] < s.weights()[b];  // ascending weights inside a group
  };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return less_point(a, b) || (!less_point(b, a) && a < b);
  });

  Atoms atoms;
  atoms.dim = dim;
  atoms.atom_of.assign(n, -1);
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k + 1;
    const auto pk = s.point(order[k]);
    while (end < n) {
      const auto pe = s.point(order[end]);
      if (!std::equal(pk.begin(), pk.end(), pe.begin())) break;
      ++end;
    }
    double w = 0.0;
    for (std::size_t t = k; t < end; ++t) w += s.weights()[order[t]];
    if (w > 0.0) {
      const auto idx = static_cast<std::ptrdiff_t>(atoms.weights.size());
      atoms.coords.insert(atoms.coords.end(), pk.begin(), pk.end());
      atoms.weights.push_back(w);
      for (std::size_t t = k; t < end; ++t) atoms.atom_of[order[t]] = idx;
    }
    k = end;
  }
  return atoms;
}

// Total order over canonical atom sets, used to pick a solve orientation that
// is independent of argument order.
bool atoms_less(const Atoms& a, const Atoms& b) {
  if (a.weights.size() != b.weights.size()) return a.weights.size() < b.weights.size();
  if (a.coords != b.coords)
    return std::lexicographical_compare(a.coords.begin(), a.coords.end(), b.coords.begin(), b.coords.end());
  return std::lexicographical_compare(a.weights.begin(), a.weights.end(), b.weights.begin(), b.weights.end());
}

struct TransportSolution {
  std::vector<double> flow;  // n*m, row-major
  std::size_t pivots = 0;
};

// Primal transportation simplex. The basis is a spanning tree over n row
// nodes and m column nodes with exactly n + m - 1 basic cells.
class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> supply, std::span<const double> demand,
                   std::span<const double> cost, std::size_t max_pivots)
      : n_(supply.size()), m_(demand.size()), cost_(cost), max_pivots_(max_pivots) {
    flow_.assign(n_ * m_, 0.0);
    basic_.assign(n_ * m_, 0);
    adj_.assign(n_ + m_, {});
    initial_basis(supply, demand);
    max_cost_ = 0.0;
    for (double c : cost_) max_cost_ = std::max(max_cost_, c);
    tolerance_ = 1e-12 * max_cost_;
  }

  TransportSolution solve() {
    u_.assign(n_, 0.0);
    v_.assign(m_, 0.0);
    parent_.assign(n_ + m_, -1);
    depth_.assign(n_ + m_, 0);
    std::size_t pivots = 0;
    std::size_t degenerate_run = 0;
    for (;;) {
      compute_potentials();
      const bool bland = degenerate_run > n_ + m_;
      const std::ptrdiff_t entering = price(bland);
      if (entering < 0) break;
      if (pivots >= max_pivots_)
        throw ConvergenceError("transport simplex exceeded its pivot limit", reduced(static_cast<std::size_t>(entering)));
      const bool degenerate = pivot(static_cast<std::size_t>(entering), bland);
      degenerate_run = degenerate ? degenerate_run + 1 : 0;
      ++pivots;
    }
    TransportSolution out;
    out.flow = std::move(flow_);
    out.pivots = pivots;
    return out;
  }

 private:
  void add_basic(std::size_t i, std::size_t j, double x) {
    const std::size_t cell = i * m_ + j;
    basic_[cell] = 1;
    flow_[cell] = x;
    adj_[i].push_back(static_cast<int>(n_ + j));
    adj_[n_ + j].push_back(static_cast<int>(i));
  }

  void remove_basic(std::size_t cell) {
    const std::size_t i = cell / m_;
    const std::size_t j = cell % m_;
    basic_[cell] = 0;
    flow_[cell] = 0.0;
    auto drop = [](std::vector<int>& list, int node) {
      list.erase(std::find(list.begin(), list.end(), node));
    };
    drop(adj_[i], static_cast<int>(n_ + j));
    drop(adj_[n_ + j], static_cast<int>(i));
  }

  // Matrix-minimum starting basis. Exactly one line is retired per
  // allocation (two on the last), which yields a spanning tree even when
  // the allocation is degenerate.
  void initial_basis(std::span<const double> supply, std::span<const double> demand) {
    std::vector<double> sa(supply.begin(), supply.end());
    std::vector<double> sb(demand.begin(), demand.end());
    std::vector<char> row_active(n_, 1);
    std::vector<char> col_active(m_, 1);
    std::size_t rows_left = n_;
    std::size_t cols_left = m_;
    // Cells come off a min-heap in (cost, index) order; usually only a small
    // fraction of them is popped before every line is retired.
    std::vector<std::pair<double, std::size_t>> heap(n_ * m_);
    for (std::size_t c = 0; c < heap.size(); ++c) heap[c] = {cost_[c], c};
    std::make_heap(heap.begin(), heap.end(), std::greater<>());
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), std::greater<>());
      const std::size_t cell = heap.back().second;
      heap.pop_back();
      if (rows_left == 0 && cols_left == 0) break;
      const std::size_t i = cell / m_;
      const std::size_t j = cell % m_;
      if (!row_active[i] || !col_active[j]) continue;
      if (rows_left == 1 && cols_left == 1) {
        add_basic(i, j, std::max(0.0, std::min(sa[i], sb[j])));
        row_active[i] = col_active[j] = 0;
        rows_left = cols_left = 0;
        break;
      }
      const double x = std::max(0.0, std::min(sa[i], sb[j]));
      add_basic(i, j, x);
      bool retire_row;
      if (rows_left == 1)
        retire_row = false;
      else if (cols_left == 1)
        retire_row = true;
      else
        retire_row = sa[i] <= sb[j];
      sa[i] -= x;
      sb[j] -= x;
      if (retire_row) {
        row_active[i] = 0;
        --rows_left;
        sb[j] = std::max(0.0, sb[j]);
      } else {
        col_active[j] = 0;
        --cols_left;
        sa[i] = std::max(0.0, sa[i]);
      }
    }
  }

  void compute_potentials() {
    std::fill(parent_.begin(), parent_.end(), -1);
    std::vector<int> stack{0};
    std::vector<char> seen(n_ + m_, 0);
    seen[0] = 1;
    u_[0] = 0.0;
    depth_[0] = 0;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int y : adj_[static_cast<std::size_t>(x)]) {
        if (seen[static_cast<std::size_t>(y)]) continue;
        seen[static_cast<std::size_t>(y)] = 1;
        parent_[static_cast<std::size_t>(y)] = x;
        depth_[static_cast<std::size_t>(y)] = depth_[static_cast<std::size_t>(x)] + 1;
        if (static_cast<std::size_t>(x) < n_) {
          const auto i = static_cast<std::size_t>(x);
          const auto j = static_cast<std::size_t>(y) - n_;
          v_[j] = cost_[i * m_ + j] - u_[i];
        } else {
          const auto j = static_cast<std::size_t>(x) - n_;
          const auto i = static_cast<std::size_t>(y);
          u_[i] = cost_[i * m_ + j] - v_[j];
        }
        stack.push_back(y);
      }
    }
  }

  double reduced(std::size_t cell) const {
    return cost_[cell] - u_[cell / m_] - v_[cell % m_];
  }

  // Bland mode takes the first improving cell in index order. Otherwise rows
  // are scanned from a rotating start, and the most negative reduced cost is
  // taken from the first block of about sqrt(n*m) rows' worth of cells that
  // holds any improving cell.
  std::ptrdiff_t price(bool bland) {
    if (bland) {
      for (std::size_t cell = 0; cell < n_ * m_; ++cell)
        if (!basic_[cell] && reduced(cell) < -tolerance_) return static_cast<std::ptrdiff_t>(cell);
      return -1;
    }
    const std::size_t block = std::max<std::size_t>(m_, static_cast<std::size_t>(std::sqrt(double(n_ * m_))) * 4);
    std::ptrdiff_t best = -1;
    double best_r = -tolerance_;
    std::size_t scanned = 0;
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t i = (next_row_ + k) % n_;
      const double ui = u_[i];
      const std::size_t base = i * m_;
      for (std::size_t j = 0; j < m_; ++j) {
        const std::size_t cell = base + j;
        if (basic_[cell]) continue;
        const double r = cost_[cell] - ui - v_[j];
        if (r < best_r) {
          best = static_cast<std::ptrdiff_t>(cell);
          best_r = r;
        }
      }
      scanned += m_;
      if (best >= 0 && scanned >= block) {
        next_row_ = (i + 1) % n_;
        return best;
      }
    }
    return best;
  }

  std::size_t cell_between(int a, int b) const {
    const auto x = static_cast<std::size_t>(a);
    const auto y = static_cast<std::size_t>(b);
    return x < n_ ? x * m_ + (y - n_) : y * m_ + (x - n_);
  }

  // Returns true for a degenerate (zero-step) pivot.
  bool pivot(std::size_t entering, bool bland) {
    const int row = static_cast<int>(entering / m_);
    const int col = static_cast<int>(n_ + entering % m_);
    // Tree path col -> ... -> row.
    std::vector<int> up_a{col};
    std::vector<int> up_b{row};
    int a = col;
    int b = row;
    while (depth_[static_cast<std::size_t>(a)] > depth_[static_cast<std::size_t>(b)]) {
      a = parent_[static_cast<std::size_t>(a)];
      up_a.push_back(a);
    }
    while (depth_[static_cast<std::size_t>(b)] > depth_[static_cast<std::size_t>(a)]) {
      b = parent_[static_cast<std::size_t>(b)];
      up_b.push_back(b);
    }
    while (a != b) {
      a = parent_[static_cast<std::size_t>(a)];
      b = parent_[static_cast<std::size_t>(b)];
      up_a.push_back(a);
      up_b.push_back(b);
    }
    path_.clear();
    for (std::size_t k = 0; k + 1 < up_a.size(); ++k) path_.push_back(cell_between(up_a[k], up_a[k + 1]));
    for (std::size_t k = up_b.size() - 1; k > 0; --k) path_.push_back(cell_between(up_b[k], up_b[k - 1]));

    // Odd positions (0, 2, ...) along the path lose flow.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = 0;
    for (std::size_t k = 0; k < path_.size(); k += 2) {
      const std::size_t cell = path_[k];
      const double f = flow_[cell];
      if (f < theta || (bland && f == theta && cell < leaving)) {
        theta = f;
        leaving = cell;
      }
    }
    for (std::size_t k = 0; k < path_.size(); ++k) {
      double& f = flow_[path_[k]];
      f = (k % 2 == 0) ? std::max(0.0, f - theta) : f + theta;
    }
    remove_basic(leaving);
    add_basic(static_cast<std::size_t>(row), static_cast<std::size_t>(col) - n_, theta);
    return theta == 0.0;
  }

  std::size_t n_;
  std::size_t m_;
  std::span<const double> cost_;
  std::size_t max_pivots_;
  double max_cost_ = 0.0;
  double tolerance_ = 0.0;
  std::vector<double> flow_;
  std::vector<char> basic_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> u_;
  std::vector<double> v_;
  std::vector<int> parent_;
  std::vector<int> depth_;
  std::vector<std::size_t> path_;
  std::size_t next_row_ = 0;
};

}  // namespace

EmdResult emd(const SampleSet& p_set, const SampleSet& q_set, double p, const EmdOptions& options) {
  check_exponent(p);
  if (p_set.empty() || q_set.empty()) throw InvalidArgument("emd needs non-empty sample sets");
  if (p_set.dim() != q_set.dim())
    throw InvalidArgument("emd between sample sets of dimension " + std::to_string(p_set.dim()) + " and " +
                          std::to_string(q_set.dim()));
  if (p_set.size() * q_set.size() > options.max_cells)
    throw SizeCapExceeded("exact transport problem of " + std::to_string(p_set.size()) + "x" +
                          std::to_string(q_set.size()) + " exceeds the cap of " +
                          std::to_string(options.max_cells) + " cells; subsample the inputs first");

  const Atoms pa = canonical_atoms(p_set);
  const Atoms qa = canonical_atoms(q_set);
  const bool swapped = atoms_less(qa, pa);
  const Atoms& src = swapped ? qa : pa;
  const Atoms& dst = swapped ? pa : qa;
  const std::size_t n = src.weights.size();
  const std::size_t m = dst.weights.size();

  std::vector<double> cost(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cost[i * m + j] = powered(ground_cost(src.point(i), dst.point(j)), p);

  const std::size_t max_pivots = options.max_pivots ? options.max_pivots : 50 * n * m + 1000;
  TransportSolution sol = TransportSimplex(src.weights, dst.weights, cost, max_pivots).solve();

  EmdResult result;
  result.pivots = sol.pivots;
  double total = 0.0;
  for (std::size_t k = 0; k < n * m; ++k) total += sol.flow[k] * cost[k];
  result.cost = total;
  result.distance = p == 1.0 ? total : std::pow(total, 1.0 / p);
  if (!options.compute_plan) return result;

  // Spread each atom-level flow back over the original points of the atom in
  // proportion to their weights.
  const std::size_t rows = p_set.size();
  const std::size_t cols = q_set.size();
  result.plan.rows = rows;
  result.plan.cols = cols;
  result.plan.data.assign(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto ai = pa.atom_of[i];
    if (ai < 0) continue;
    const double fi = p_set.weights()[i] / pa.weights[static_cast<std::size_t>(ai)];
    for (std::size_t j = 0; j < cols; ++j) {
      const auto bj = qa.atom_of[j];
      if (bj < 0) continue;
      const double fj = q_set.weights()[j] / qa.weights[static_cast<std::size_t>(bj)];
      const auto si = static_cast<std::size_t>(swapped ? bj : ai);
      const auto sj = static_cast<std::size_t>(swapped ? ai : bj);
      result.plan.data[i * cols + j] = sol.flow[si * m + sj] * fi * fj;
    }
  }
  return result;
}

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

SinkhornResult sinkhorn(const SampleSet& p_set, const SampleSet& q_set, double p,
                        const SinkhornOptions& options) {
  check_exponent(p);
  if (!(options.epsilon > 0.0)) throw InvalidArgument("sinkhorn regularization must be > 0");
  if (options.max_iterations < 1) throw InvalidArgument("sinkhorn needs at least one iteration");
  const CostMatrix c = cost_matrix(p_set, q_set, p);
  const std::size_t n = c.rows;
  const std::size_t m = c.cols;
  const double eps = options.epsilon;
  const auto& a = p_set.weights();
  const auto& b = q_set.weights();
  std::vector<double> log_a(n), log_b(m);
  for (std::size_t i = 0; i < n; ++i) log_a[i] = a[i] > 0.0 ? std::log(a[i]) : -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) log_b[j] = b[j] > 0.0 ? std::log(b[j]) : -std::numeric_limits<double>::infinity();

  std::vector<double> f(n, 0.0), g(m, 0.0), buf;
  auto plan_entry = [&](std::size_t i, std::size_t j) {
    const double e = (f[i] + g[j] - c.at(i, j)) / eps;
    return std::isfinite(e) ? std::exp(e) : 0.0;
  };
  auto row_residual = [&]() {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += plan_entry(i, j);
      worst = std::max(worst, std::abs(s - a[i]));
    }
    return worst;
  };

  SinkhornResult result;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(log_a[i])) {
        f[i] = -std::numeric_limits<double>::infinity();
        continue;
      }
      buf.resize(m);
      for (std::size_t j = 0; j < m; ++j) buf[j] = (g[j] - c.at(i, j)) / eps;
      f[i] = eps * (log_a[i] - log_sum_exp(buf));
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (!std::isfinite(log_b[j])) {
        g[j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      buf.resize(n);
      for (std::size_t i = 0; i < n; ++i) buf[i] = (f[i] - c.at(i, j)) / eps;
      g[j] = eps * (log_b[j] - log_sum_exp(buf));
    }
    if (it % 10 == 9 || it + 1 == options.max_iterations) {
      residual = row_residual();
      if (residual <= options.tolerance) {
        ++it;
        break;
      }
    }
  }
  if (!(residual <= options.tolerance))
    throw ConvergenceError("sinkhorn did not reach the marginal tolerance in " +
                               std::to_string(options.max_iterations) + " iterations",
                           residual);

  result.plan.rows = n;
  result.plan.cols = m;
  result.plan.data.resize(n * m);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double x = plan_entry(i, j);
      result.plan.data[i * m + j] = x;
      total += x * c.at(i, j);
    }
  result.distance = p == 1.0 ? total : std::pow(total, 1.0 / p);
  result.iterations = it;
  result.residual = residual;
  return result;
}

namespace {

std::uint64_t content_hash(const SampleSet& s) {
  std::uint64_t h = fnv1a64(std::string_view(reinterpret_cast<const char*>(s.coords().data()),
                                             s.coords().size() * sizeof(double)));
  h ^= splitmix64(fnv1a64(std::string_view(reinterpret_cast<const char*>(s.weights().data()),
                                           s.weights().size() * sizeof(double))));
  return h;
}

}  // namespace

SampleSet subsample(const SampleSet& set, std::size_t max_points, std::uint64_t seed) {
  if (max_points == 0) throw InvalidArgument("subsample size must be positive");
  if (set.size() <= max_points) return set;
  Rng rng(splitmix64(seed ^ content_hash(set)));
  std::vector<std::size_t> idx(set.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < max_points; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  idx.resize(max_points);
  std::sort(idx.begin(), idx.end());
  std::vector<double> coords;
  std::vector<double> weights;
  coords.reserve(max_points * set.dim());
  double total = 0.0;
  for (std::size_t i : idx) total += set.weights()[i];
  for (std::size_t i : idx) {
    const auto pt = set.point(i);
    coords.insert(coords.end(), pt.begin(), pt.end());
    weights.push_back(total > 0.0 ? set.weights()[i] / total : 1.0 / static_cast<double>(max_points));
  }
  return SampleSet(set.dim(), std::move(coords), std::move(weights));
}

double level_distance(const SampleSet& a, const SampleSet& b, const DistanceConfig& config) {
  const SampleSet sa = subsample(a, config.max_samples, config.seed);
  const SampleSet sb = subsample(b, config.max_samples, config.seed);
  if (config.sinkhorn_fallback && sa.size() * sb.size() > config.emd.max_cells)
    return sinkhorn(sa, sb, config.exponent, config.sinkhorn).distance;
  EmdOptions opts = config.emd;
  opts.compute_plan = false;
  return emd(sa, sb, config.exponent, opts).distance;
}

}  // namespace ued

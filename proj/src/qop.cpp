#include "homoflow/qop.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace homoflow {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw Error(ErrorKind::Param, msg);
}

double to_double(const Rat& r) { return r.convert_to<double>(); }
double to_double(const Int& i) { return i.convert_to<double>(); }

double log_factorial(int n) { return std::lgamma(double(n) + 1.0); }

FiniteStructure strip_aux(const FiniteStructure& s) {
  FiniteStructure r = s;
  r.aux.clear();
  return r;
}

int small_k(SamplerKind kind, const QopParams& p) {
  return (kind == SamplerKind::Domega || kind == SamplerKind::Dn) ? (int)p.a.size() : p.k;
}

ClassSpec age_spec(SamplerKind kind, const QopParams& p) {
  ClassSpec c;
  switch (kind) {
    case SamplerKind::Domega: c.kind = ClassSpec::Kind::Domega; break;
    case SamplerKind::Dn:
      c.kind = ClassSpec::Kind::Dn;
      c.param = p.n;
      break;
    case SamplerKind::HatT: c.kind = ClassSpec::Kind::HatT; break;
    case SamplerKind::SR: c.kind = ClassSpec::Kind::SemiGeneric; break;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Samplers

FiniteStructure sample_multipartite(int classes, int m, Rng& r) {
  FiniteStructure g = FiniteStructure::empty(classes * m);
  for (int u = 0; u < g.n; ++u)
    for (int v = u + 1; v < g.n; ++v) {
      if (u / m == v / m) continue;
      if (r.coin()) g.set_arc(u, v);
      else g.set_arc(v, u);
    }
  return g;
}

FiniteStructure sample_hatt(int n, Rng& r) {
  FiniteStructure t = FiniteStructure::empty(n);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) {
      if (r.coin()) t.set_arc(u, v);
      else t.set_arc(v, u);
    }
  t.order.resize(n);
  std::iota(t.order.begin(), t.order.end(), 0);
  return delta_inverse(t).base;
}

// uniform half/half indicator over m slots
std::vector<char> draw_half_mask(int m, Rng& r) {
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  r.shuffle(idx);
  std::vector<char> in(m, 0);
  for (int i = 0; i < m / 2; ++i) in[idx[i]] = 1;
  return in;
}

FiniteStructure sample_sr(int n, int M, Rng& r) {
  FiniteStructure g = FiniteStructure::empty(n * M);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      auto in_a = draw_half_mask(M, r);
      auto in_b = draw_half_mask(M, r);
      for (int x = 0; x < M; ++x)
        for (int y = 0; y < M; ++y) {
          int vx = i * M + x, vy = j * M + y;
          if (in_a[x] != in_b[y]) g.set_arc(vx, vy);
          else g.set_arc(vy, vx);
          if (in_b[y]) g.set_aux(vx, vy);
          if (in_a[x]) g.set_aux(vy, vx);
        }
    }
  return g;
}

// ---------------------------------------------------------------------------
// Forced column order of a structure carrying the auxiliary pair relation.
// For columns a, b the quadruple parity over {t_a, x} x {t_b, y} pins the
// direction between the virtual transversal points:
//   t_a -> t_b  <=>  R(x, y) XOR not R(y, x) XOR arc(x, y)
// and a valid member realizes a transitive tournament on its columns.

std::vector<int> sr_column_order(const FiniteStructure& g,
                                 const std::vector<std::vector<int>>& cols) {
  int K = (int)cols.size();
  std::vector<std::vector<char>> first(K, std::vector<char>(K, 0));
  auto rel = [&](int u, int v) { return g.has_aux() && g.aux_rel(u, v); };
  for (int a = 0; a < K; ++a)
    for (int b = a + 1; b < K; ++b) {
      int bit = -1;
      for (int x : cols[a])
        for (int y : cols[b]) {
          int v = (rel(x, y) ? 1 : 0) ^ (rel(y, x) ? 0 : 1) ^ (g.arc(x, y) ? 1 : 0);
          if (bit < 0) bit = v;
          else if (bit != v)
            throw Error(ErrorKind::Validation,
                        "pair relation is inconsistent across a column pair");
        }
      first[a][b] = (char)bit;
      first[b][a] = (char)(1 - bit);
    }
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    int wa = 0, wb = 0;
    for (int c = 0; c < K; ++c) {
      if (c != a) wa += first[a][c];
      if (c != b) wb += first[b][c];
    }
    return wa > wb;
  });
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j)
      if (!first[order[i]][order[j]])
        throw Error(ErrorKind::Validation, "forced column order is not transitive");
  return order;
}

// ---------------------------------------------------------------------------
// Big-side expansion sampling.  Embedding counts are taken at the digraph
// level (the sampler's pair relation steers flips only), and the big-side
// expansion is drawn uniformly from the class's expansions of the base.

struct BigSide {
  FiniteStructure base;  // aux-stripped when the class carries the pair relation
  std::vector<std::vector<int>> cols;
};

Expansion sample_big_expansion(SamplerKind kind, const BigSide& b, Rng& r) {
  Expansion e;
  e.base = b.base;
  int K = (int)b.cols.size();
  std::vector<int> cidx(K);
  std::iota(cidx.begin(), cidx.end(), 0);
  switch (kind) {
    case SamplerKind::Domega:
    case SamplerKind::Dn: {
      r.shuffle(cidx);
      if (kind == SamplerKind::Dn) e.labels.assign(b.base.n, 0);
      for (int pos = 0; pos < K; ++pos) {
        std::vector<int> blk = b.cols[cidx[pos]];
        r.shuffle(blk);
        for (int v : blk) {
          e.order.push_back(v);
          if (kind == SamplerKind::Dn) e.labels[v] = pos + 1;
        }
      }
      break;
    }
    case SamplerKind::HatT: {
      r.shuffle(cidx);
      e.labels.assign(b.base.n, 0);
      for (int c : cidx) {
        auto& col = b.cols[c];
        int bit = r.coin() ? 1 : 0;
        int lo = col[bit], hi = col[1 - bit];
        e.order.push_back(lo);
        e.order.push_back(hi);
        e.labels[lo] = 0;
        e.labels[hi] = 1;
      }
      break;
    }
    case SamplerKind::SR: {
      r.shuffle(cidx);
      e.ensure_R();
      for (int pos = 0; pos < K; ++pos) {
        std::vector<int> blk = b.cols[cidx[pos]];
        r.shuffle(blk);
        for (int v : blk) e.order.push_back(v);
      }
      for (int i = 0; i < K; ++i)
        for (int j = i + 1; j < K; ++j) {
          int beta = r.coin() ? 1 : 0;
          auto& col_i = b.cols[cidx[i]];
          auto& col_j = b.cols[cidx[j]];
          int x0 = col_i[0], y0 = col_j[0];
          for (int y : col_j) {
            int rxy = beta ^ (b.base.arc(x0, y) ? 1 : 0) ^ (b.base.arc(x0, y0) ? 1 : 0);
            if (rxy)
              for (int x : col_i) e.set_R(x, y);
          }
          for (int x : col_i) {
            int ryx = beta ^ (b.base.arc(x, y0) ? 1 : 0);
            if (ryx)
              for (int y : col_j) e.set_R(y, x);
          }
        }
      break;
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Trials

struct TrialOut {
  long emb = 0;
  long exp0 = 0;
  double maxdev = 0;
  bool degenerate = false;
};

TrialOut run_trial(SamplerKind kind, const FiniteStructure& h_base,
                   const std::vector<Expansion>& h_exps, const QopParams& p, uint64_t trial) {
  Rng r = trial_rng(p.seed, trial);
  FiniteStructure g = sample_structure(kind, p, r.next());
  BigSide big;
  big.cols = perp_partition(g);
  big.base = kind == SamplerKind::SR ? strip_aux(g) : std::move(g);
  TrialOut out;
  auto embs = enumerate_embeddings(h_base, big.base);
  out.emb = (long)embs.size();
  if (embs.empty()) {
    out.degenerate = true;
    return out;
  }
  double rho = 1.0 / (double)h_exps.size();
  std::vector<long> tally(h_exps.size());
  for (int s = 0; s < p.expansion_samples; ++s) {
    Expansion gstar = sample_big_expansion(kind, big, r);
    std::fill(tally.begin(), tally.end(), 0L);
    for (auto& phi : embs) {
      Expansion pull = restrict_expansion(gstar, phi, h_base);
      size_t idx = 0;
      while (idx < h_exps.size() && !(pull == h_exps[idx])) ++idx;
      if (idx == h_exps.size())
        throw Error(ErrorKind::Validation, "pullback escaped the expansion set");
      ++tally[idx];
    }
    for (size_t i = 0; i < tally.size(); ++i) {
      double dev = std::fabs((double)tally[i] / (double)out.emb - rho);
      if (dev > out.maxdev) out.maxdev = dev;
    }
    if (s == 0) out.exp0 = tally[0];
  }
  return out;
}

// growth parameter in the concentration exponent: the one the analysis sends
// to infinity (class size for Dn, class/column count otherwise)
int growth_param(SamplerKind kind, const QopParams& p) {
  return kind == SamplerKind::Dn ? p.m : p.n;
}

long variable_count(SamplerKind kind, const QopParams& p) {
  long pairs = (long)p.n * (p.n - 1) / 2;
  if (kind == SamplerKind::Domega || kind == SamplerKind::Dn)
    return pairs * (long)p.m * p.m;
  return pairs;
}

QopRunReport run_core(SamplerKind kind, const FiniteStructure& h, const QopParams& p,
                      bool parallel) {
  validate_qop_params(kind, p);
  FiniteStructure h_base = h;
  std::vector<Expansion> h_exps;
  switch (kind) {
    case SamplerKind::Domega:
    case SamplerKind::Dn: {
      ClassSpec spec = age_spec(kind, p);
      if (!validate_structure(h, spec))
        throw Error(ErrorKind::Validation, "small structure is not in the sampler's class");
      auto cols = perp_partition(h);
      std::vector<int> sizes;
      for (auto& c : cols) sizes.push_back((int)c.size());
      std::vector<int> want = p.a;
      std::sort(sizes.begin(), sizes.end());
      std::sort(want.begin(), want.end());
      require(sizes == want, "class sizes of the small structure must match a");
      h_exps = enumerate_expansions(spec, h);
      break;
    }
    case SamplerKind::HatT: {
      ClassSpec spec = age_spec(kind, p);
      if (!validate_structure(h, spec))
        throw Error(ErrorKind::Validation, "small structure is not in the sampler's class");
      auto cols = perp_partition(h);
      require((int)cols.size() == p.k, "column count of the small structure must match k");
      for (auto& c : cols) require(c.size() == 2, "columns must be fully doubled");
      h_exps = enumerate_expansions(spec, h);
      break;
    }
    case SamplerKind::SR: {
      h_base = strip_aux(h);
      ClassSpec spec = age_spec(kind, p);
      if (!validate_structure(h_base, spec))
        throw Error(ErrorKind::Validation, "small structure is not in the sampler's class");
      auto cols = perp_partition(h_base);
      require((int)cols.size() == p.k, "column count of the small structure must match k");
      for (auto& c : cols) require((int)c.size() == p.M, "columns must have size M");
      h_exps = enumerate_expansions(spec, h_base);
      break;
    }
  }

  std::vector<TrialOut> outs((size_t)std::max<long>(p.trials, 0));
  bool failed = false;
  ErrorKind fail_kind = ErrorKind::Validation;
  std::string fail_msg;
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < p.trials; ++t) {
      try {
        outs[t] = run_trial(kind, h_base, h_exps, p, (uint64_t)t);
      } catch (const Error& e) {
#pragma omp critical
        {
          failed = true;
          fail_kind = e.kind;
          fail_msg = e.what();
        }
      } catch (const std::exception& e) {
#pragma omp critical
        {
          failed = true;
          fail_msg = e.what();
        }
      }
    }
  } else {
    for (long t = 0; t < p.trials; ++t) outs[t] = run_trial(kind, h_base, h_exps, p, (uint64_t)t);
  }
  if (failed) throw Error(fail_kind, fail_msg);

  QopRunReport rep;
  rep.sampler = sampler_name(kind);
  rep.epsilon = p.epsilon;
  rep.D = p.D;
  rep.num_h_expansions = Int((long)h_exps.size());
  rep.rho = Rat(1) / Rat(rep.num_h_expansions);
  rep.num_vars = variable_count(kind, p);
  switch (kind) {
    case SamplerKind::Domega:
    case SamplerKind::Dn:
      rep.log_num_g_expansions = log_factorial(p.n) + p.n * log_factorial(p.m);
      break;
    case SamplerKind::HatT:
      rep.log_num_g_expansions = log_factorial(p.n) + p.n * std::log(2.0);
      break;
    case SamplerKind::SR:
      rep.log_num_g_expansions = log_factorial(p.n) +
                                 (double)p.n * (p.n - 1) / 2.0 * std::log(2.0) +
                                 p.n * log_factorial(p.M);
      break;
  }
  double emb_sum = 0;
  long used = 0;
  for (auto& o : outs) {
    rep.emb_counts.push_back(o.emb);
    rep.exp_counts.push_back(o.exp0);
    if (o.degenerate) {
      ++rep.degenerate;
      continue;
    }
    rep.trial_max_dev.push_back(o.maxdev);
    rep.max_deviation = std::max(rep.max_deviation, o.maxdev);
    emb_sum += (double)o.emb;
    ++used;
  }
  rep.mean_emb = used ? emb_sum / (double)used : 0.0;
  rep.expected_emb = expected_embeddings(kind, p);

  double I = to_double(rep.expected_emb);
  double d_emb = to_double(sensitivity_bound_emb(kind, p, 0, 1)) / I;
  double d_exp = to_double(sensitivity_bound_exp(kind, p, 0, 1)) / I;
  double s = (double)growth_param(kind, p);
  rep.epsilon1 = d_emb * s * s;
  rep.epsilon2 = d_exp * s * s;
  double nv = (double)rep.num_vars;
  double exp1 = 2.0 * p.D * p.D / (nv * d_emb * d_emb);
  double exp2 = 2.0 * p.D * p.D / (nv * d_exp * d_exp);
  rep.delta1 = exp1 / (p.D * p.D * s * s);
  rep.delta2 = exp2 / (p.D * p.D * s * s);
  rep.delta3 = std::min(rep.delta1, rep.delta2);
  double exp3 = std::min(exp1, exp2);
  rep.mcdiarmid_log_p =
      std::log(2.0) + std::log(to_double(rep.num_h_expansions)) + rep.log_num_g_expansions - exp3;
  if (rep.mcdiarmid_log_p >= std::log(2.0)) rep.mcdiarmid_p = 2.0;
  else rep.mcdiarmid_p = std::exp(rep.mcdiarmid_log_p);
  if (kind == SamplerKind::SR) {
    double c2 = to_double(binomial(p.M, p.M / 2));
    rep.sr_pair_prob = 1.0 / (c2 * c2);
    rep.sr_pair_prob_identified = 2.0 / (c2 * c2);
  }
  return rep;
}

json num_or_name(double v) {
  if (std::isfinite(v)) return json(v);
  return json(v > 0 ? "inf" : "-inf");
}

// flip positions share one deterministic enumeration: classes ascending by
// minimum element, vertex pairs / column pairs in lexicographic order
struct FlipPlan {
  int x = -1, y = -1;  // vertex pair (multipartite kinds)
  int ci = -1, cj = -1;
};

bool vertex_flips(SamplerKind kind) {
  return kind == SamplerKind::Domega || kind == SamplerKind::Dn;
}

FlipPlan locate_flip(SamplerKind kind, const std::vector<std::vector<int>>& cols, long idx) {
  int K = (int)cols.size();
  long at = 0;
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j) {
      if (vertex_flips(kind)) {
        long block = (long)cols[i].size() * cols[j].size();
        if (idx < at + block) {
          long off = idx - at;
          FlipPlan f;
          f.ci = i;
          f.cj = j;
          f.x = cols[i][off / (long)cols[j].size()];
          f.y = cols[j][off % (long)cols[j].size()];
          return f;
        }
        at += block;
      } else {
        if (idx == at) return FlipPlan{-1, -1, i, j};
        ++at;
      }
    }
  throw Error(ErrorKind::Param, "flip index out of range");
}

}  // namespace

// ---------------------------------------------------------------------------

SamplerKind sampler_from_string(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back((char)std::tolower((unsigned char)c));
  if (s == "domega" || s == "d-omega") return SamplerKind::Domega;
  if (s == "dn" || s == "d-n") return SamplerKind::Dn;
  if (s == "hatt" || s == "hat-t") return SamplerKind::HatT;
  if (s == "sr" || s == "s-r") return SamplerKind::SR;
  throw Error(ErrorKind::Param, "unknown sampler: " + name);
}

std::string sampler_name(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Domega: return "domega";
    case SamplerKind::Dn: return "dn";
    case SamplerKind::HatT: return "hatT";
    case SamplerKind::SR: return "sR";
  }
  return "";
}

void validate_qop_params(SamplerKind kind, const QopParams& p) {
  require(p.D > 0 && p.D <= p.epsilon, "need 0 < D <= epsilon");
  require(p.n >= 1, "need n >= 1");
  require(p.trials >= 0, "need trials >= 0");
  require(p.expansion_samples >= 1, "need expansion_samples >= 1");
  int k = small_k(kind, p);
  require(k >= 1 && k <= p.n, "need 1 <= k <= n");
  switch (kind) {
    case SamplerKind::Domega:
    case SamplerKind::Dn:
      require(p.m >= 1, "need m >= 1");
      for (int ai : p.a) require(ai >= 1 && ai <= p.m, "class sizes must lie in [1, m]");
      break;
    case SamplerKind::HatT: break;
    case SamplerKind::SR:
      require(p.M >= 2 && p.M % 2 == 0, "column size M must be even and at least 2");
      break;
  }
}

double mcdiarmid_bound(const std::vector<double>& a, double eps) {
  if (a.empty()) throw Error(ErrorKind::Domain, "need at least one difference bound");
  if (eps <= 0) throw Error(ErrorKind::Domain, "need a positive deviation");
  double s = 0;
  for (double ai : a) {
    if (ai <= 0) throw Error(ErrorKind::Domain, "difference bounds must be positive");
    s += ai * ai;
  }
  return 2.0 * std::exp(-2.0 * eps * eps / s);
}

FiniteStructure sample_structure(SamplerKind kind, const QopParams& p, uint64_t seed) {
  validate_qop_params(kind, p);
  Rng r(seed);
  switch (kind) {
    case SamplerKind::Domega:
    case SamplerKind::Dn: return sample_multipartite(p.n, p.m, r);
    case SamplerKind::HatT: return sample_hatt(p.n, r);
    case SamplerKind::SR: return sample_sr(p.n, p.M, r);
  }
  throw Error(ErrorKind::Unsupported, "unknown sampler");
}

Rat expected_embeddings(SamplerKind kind, const QopParams& p) {
  validate_qop_params(kind, p);
  switch (kind) {
    case SamplerKind::Domega:
    case SamplerKind::Dn: {
      int k = (int)p.a.size();
      Int num = falling(p.n, k);
      long cross = 0;
      for (int i = 0; i < k; ++i) {
        num *= falling(p.m, p.a[i]);
        for (int j = i + 1; j < k; ++j) cross += (long)p.a[i] * p.a[j];
      }
      return Rat(num) / Rat(Int(1) << cross);
    }
    case SamplerKind::HatT: {
      Int num = falling(p.n, p.k) * (Int(1) << p.k);
      return Rat(num) / Rat(Int(1) << (p.k * (p.k - 1) / 2));
    }
    case SamplerKind::SR: {
      Int num = falling(p.n, p.k);
      for (int i = 0; i < p.k; ++i) num *= factorial(p.M);
      Int c = binomial(p.M, p.M / 2);
      Int den = 1;
      for (int t = 0; t < p.k * (p.k - 1) / 2; ++t) den *= c * c;
      return Rat(num) / Rat(den);
    }
  }
  throw Error(ErrorKind::Unsupported, "unknown sampler");
}

QopRunReport run_qop_experiment(SamplerKind kind, const FiniteStructure& h, const QopParams& p) {
  return run_core(kind, h, p, true);
}

QopRunReport run_qop_experiment_serial(SamplerKind kind, const FiniteStructure& h,
                                       const QopParams& p) {
  return run_core(kind, h, p, false);
}

long flip_count(SamplerKind kind, const FiniteStructure& g) {
  auto cols = perp_partition(g);
  int K = (int)cols.size();
  if (!vertex_flips(kind)) return (long)K * (K - 1) / 2;
  long c = 0;
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j) c += (long)cols[i].size() * cols[j].size();
  return c;
}

FlipResult single_edge_sensitivity(SamplerKind kind, const FiniteStructure& h,
                                   const FiniteStructure& g, long flip_index, uint64_t reseed) {
  auto cols = perp_partition(g);
  FlipPlan plan = locate_flip(kind, cols, flip_index);
  FiniteStructure g2 = g;
  switch (kind) {
    case SamplerKind::Domega:
    case SamplerKind::Dn: {
      if (g2.arc(plan.x, plan.y)) {
        g2.clear_arc(plan.x, plan.y);
        g2.set_arc(plan.y, plan.x);
      } else if (g2.arc(plan.y, plan.x)) {
        g2.clear_arc(plan.y, plan.x);
        g2.set_arc(plan.x, plan.y);
      } else {
        throw Error(ErrorKind::Validation, "cross pair carries no arc");
      }
      break;
    }
    case SamplerKind::HatT: {
      auto& ci = cols[plan.ci];
      auto& cj = cols[plan.cj];
      if (ci.size() != 2 || cj.size() != 2)
        throw Error(ErrorKind::Validation, "columns must be fully doubled");
      for (int u : ci)
        for (int v : cj) {
          if (g2.arc(u, v)) {
            g2.clear_arc(u, v);
            g2.set_arc(v, u);
          } else {
            g2.clear_arc(v, u);
            g2.set_arc(u, v);
          }
        }
      break;
    }
    case SamplerKind::SR: {
      auto order = sr_column_order(g, cols);
      std::vector<int> pos(cols.size());
      for (size_t i = 0; i < order.size(); ++i) pos[order[i]] = (int)i;
      int lo = plan.ci, hi = plan.cj;
      if (pos[hi] < pos[lo]) std::swap(lo, hi);
      auto& ci = cols[lo];
      auto& cj = cols[hi];
      int M = (int)ci.size();
      if ((int)cj.size() != M || M % 2)
        throw Error(ErrorKind::Validation, "columns must have equal even size");
      int x0 = ci[0], y0 = cj[0];
      std::vector<char> in_a(M), in_b(M);
      for (int i = 0; i < M; ++i) in_a[i] = g.has_aux() && g.aux_rel(y0, ci[i]);
      for (int i = 0; i < M; ++i) in_b[i] = g.has_aux() && g.aux_rel(x0, cj[i]);
      Rng rr(reseed);
      std::vector<char> na, nb;
      do {
        na = draw_half_mask(M, rr);
        nb = draw_half_mask(M, rr);
      } while (na == in_a && nb == in_b);
      if (!g2.has_aux()) g2.aux.assign((size_t)g2.n * g2.words(), 0);
      auto aux_clear = [&](int a, int b) {
        g2.aux[(size_t)a * g2.words() + (b >> 6)] &= ~(1ull << (b & 63));
      };
      for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
          int vx = ci[i], vy = cj[j];
          g2.clear_arc(vx, vy);
          g2.clear_arc(vy, vx);
          aux_clear(vx, vy);
          aux_clear(vy, vx);
          if (na[i] != nb[j]) g2.set_arc(vx, vy);
          else g2.set_arc(vy, vx);
          if (nb[j]) g2.set_aux(vx, vy);
          if (na[i]) g2.set_aux(vy, vx);
        }
      break;
    }
  }
  FlipResult res;
  res.class_i = plan.ci;
  res.class_j = plan.cj;
  res.delta = count_embeddings(h, g2) - count_embeddings(h, g);
  res.flipped = std::move(g2);
  return res;
}

Int sensitivity_bound_emb(SamplerKind kind, const QopParams& p, int, int) {
  validate_qop_params(kind, p);
  int k = small_k(kind, p);
  switch (kind) {
    case SamplerKind::Domega: {
      Int b = Int(k) * (k - 1) * falling(p.n - 2, k - 2);
      for (int ai : p.a) b *= falling(p.m, ai);
      return b;
    }
    case SamplerKind::Dn: {
      if (k < 2) return 0;
      Int best = 0;
      for (int r = 0; r < k; ++r)
        for (int s = 0; s < k; ++s) {
          if (r == s) continue;
          Int v = Int(p.a[r]) * falling(p.m - 1, p.a[r] - 1) * Int(p.a[s]) *
                  falling(p.m - 1, p.a[s] - 1);
          for (int l = 0; l < k; ++l)
            if (l != r && l != s) v *= binomial(p.m, p.a[l]);
          if (v > best) best = v;
        }
      return Int(k) * (k - 1) * falling(p.n - 2, k - 2) * best;
    }
    case SamplerKind::HatT:
      return Int(k) * (k - 1) * falling(p.n - 2, k - 2) * (Int(1) << k);
    case SamplerKind::SR: {
      Int b = Int(k) * (k - 1) * falling(p.n - 2, k - 2);
      for (int i = 0; i < k; ++i) b *= factorial(p.M);
      return b;
    }
  }
  throw Error(ErrorKind::Unsupported, "unknown sampler");
}

Int sensitivity_bound_exp(SamplerKind kind, const QopParams& p, int, int) {
  validate_qop_params(kind, p);
  int k = small_k(kind, p);
  switch (kind) {
    case SamplerKind::Domega: {
      Int b = binomial(k, 2) * falling(p.n - 2, k - 2);
      for (int ai : p.a) b *= falling(p.m, ai);
      return b;
    }
    case SamplerKind::Dn: {
      if (k < 2) return 0;
      Int best = 0;
      for (int r = 0; r < k; ++r)
        for (int s = 0; s < k; ++s) {
          if (r == s) continue;
          Int v = Int(p.a[r]) * falling(p.m - 1, p.a[r] - 1) * Int(p.a[s]) *
                  falling(p.m - 1, p.a[s] - 1);
          for (int l = 0; l < k; ++l)
            if (l != r && l != s) v *= binomial(p.m, p.a[l]);
          if (v > best) best = v;
        }
      return best;
    }
    case SamplerKind::HatT:
    case SamplerKind::SR:
      return Int(k) * (k - 1) * falling(p.n - 2, k - 2);
  }
  throw Error(ErrorKind::Unsupported, "unknown sampler");
}

json qop_report_to_json(const QopRunReport& r) {
  json j;
  j["sampler"] = r.sampler;
  j["epsilon"] = r.epsilon;
  j["half_tolerance"] = r.D;
  j["rho"] = rat_to_string(r.rho);
  j["num_small_expansions"] = r.num_h_expansions.str();
  j["log_num_big_expansions"] = num_or_name(r.log_num_g_expansions);
  j["num_vars"] = r.num_vars;
  j["emb_counts"] = r.emb_counts;
  j["exp_counts"] = r.exp_counts;
  j["trial_max_dev"] = r.trial_max_dev;
  j["max_deviation"] = r.max_deviation;
  j["degenerate"] = r.degenerate;
  j["mean_emb"] = r.mean_emb;
  j["expected_emb"] = rat_to_string(r.expected_emb);
  j["zeta"] = r.zeta;
  j["epsilon1"] = num_or_name(r.epsilon1);
  j["epsilon2"] = num_or_name(r.epsilon2);
  j["delta1"] = num_or_name(r.delta1);
  j["delta2"] = num_or_name(r.delta2);
  j["delta3"] = num_or_name(r.delta3);
  j["mcdiarmid_log_p"] = num_or_name(r.mcdiarmid_log_p);
  j["mcdiarmid_p"] = num_or_name(r.mcdiarmid_p);
  if (r.sampler == "sR") {
    j["sr_pair_prob"] = r.sr_pair_prob;
    j["sr_pair_prob_identified"] = r.sr_pair_prob_identified;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Hypergraph scaffolding

namespace {

void check_hyperedges(const Hypergraph& hg) {
  for (auto& e : hg.edges) {
    if ((int)e.size() != hg.k)
      throw Error(ErrorKind::Validation, "hyperedge arity mismatch");
    for (size_t i = 0; i < e.size(); ++i) {
      if (e[i] < 0 || e[i] >= hg.n)
        throw Error(ErrorKind::Validation, "hyperedge vertex out of range");
      if (i && e[i] <= e[i - 1])
        throw Error(ErrorKind::Validation, "hyperedge vertices must be strictly ascending");
    }
  }
}

// size of the intersection of two sorted vertex sets; *common holds one
// shared vertex when the size is exactly one
int intersect_size(const std::vector<int>& a, const std::vector<int>& b, int* common) {
  int cnt = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (a[i] > b[j]) ++j;
    else {
      if (common) *common = a[i];
      ++cnt;
      ++i;
      ++j;
    }
  }
  return cnt;
}

}  // namespace

json hypergraph_to_json(const Hypergraph& hg) {
  json j;
  j["n"] = hg.n;
  j["k"] = hg.k;
  j["edges"] = hg.edges;
  j["target_constant"] = hg.target_constant;
  j["target"] = hg.target;
  j["reached_target"] = hg.reached_target;
  return j;
}

bool hypergraph_girth_ok(const Hypergraph& hg) {
  check_hyperedges(hg);
  int s = (int)hg.edges.size();
  std::vector<std::vector<int8_t>> isz((size_t)s, std::vector<int8_t>((size_t)s, 0));
  std::vector<std::vector<int>> common((size_t)s, std::vector<int>((size_t)s, -1));
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j) {
      int c = -1;
      int sz = intersect_size(hg.edges[i], hg.edges[j], &c);
      if (sz >= 2) return false;
      isz[i][j] = isz[j][i] = (int8_t)sz;
      common[i][j] = common[j][i] = c;
    }
  for (int i = 0; i < s; ++i)
    for (int j = i + 1; j < s; ++j) {
      if (isz[i][j] != 1) continue;
      for (int l = j + 1; l < s; ++l) {
        if (isz[j][l] != 1 || isz[i][l] != 1) continue;
        int x = common[i][j], y = common[j][l], z = common[i][l];
        if (x != y && y != z && x != z) return false;
      }
    }
  return true;
}

Hypergraph build_girth4_hypergraph(int n, int k, uint64_t seed, double target_constant) {
  if (n < k || k < 3) throw Error(ErrorKind::Param, "need n >= k >= 3");
  if (target_constant <= 0) throw Error(ErrorKind::Param, "need a positive target constant");
  Hypergraph hg;
  hg.n = n;
  hg.k = k;
  hg.target_constant = target_constant;
  hg.target =
      std::max<long>(1, (long)std::ceil(target_constant * std::pow((double)n, 4.0 / 3.0)));
  Rng r(seed);
  std::vector<std::vector<int>> inc(n);
  long budget = 400L * hg.target + 4000;
  for (long attempt = 0; attempt < budget && (long)hg.edges.size() < hg.target; ++attempt) {
    std::vector<int> cand;
    while ((int)cand.size() < k) {
      int v = (int)r.below((uint64_t)n);
      if (std::find(cand.begin(), cand.end(), v) == cand.end()) cand.push_back(v);
    }
    std::sort(cand.begin(), cand.end());
    std::vector<int> meets;
    bool ok = true;
    for (int v : cand) {
      for (int e : inc[v]) {
        if (std::find(meets.begin(), meets.end(), e) != meets.end()) {
          ok = false;  // a second shared vertex with edge e
          break;
        }
        meets.push_back(e);
      }
      if (!ok) break;
    }
    if (!ok) continue;
    for (size_t a = 0; a < meets.size() && ok; ++a)
      for (size_t b = a + 1; b < meets.size() && ok; ++b)
        if (intersect_size(hg.edges[meets[a]], hg.edges[meets[b]], nullptr) == 1)
          ok = false;  // would close a three-edge cycle
    if (!ok) continue;
    int id = (int)hg.edges.size();
    hg.edges.push_back(cand);
    for (int v : cand) inc[v].push_back(id);
  }
  hg.reached_target = (long)hg.edges.size() >= hg.target;
  return hg;
}

FiniteStructure plant_hypergraph_digraph(const Hypergraph& hg, const FiniteStructure& h,
                                         const ClassSpec& mode, uint64_t seed) {
  if (mode.kind != ClassSpec::Kind::Gn && mode.kind != ClassSpec::Kind::FT)
    throw Error(ErrorKind::Param, "mode must be one of the omitter classes");
  if (h.n != hg.k) throw Error(ErrorKind::Param, "copy size must equal the hyperedge size");
  if (!validate_structure(h, mode))
    throw Error(ErrorKind::Param, "copy is not a member of the mode class");
  check_hyperedges(hg);
  FiniteStructure g = FiniteStructure::empty(hg.n);
  std::vector<char> covered((size_t)hg.n * hg.n, 0);
  Rng r(seed);
  for (auto& e : hg.edges) {
    std::vector<int> perm(hg.k);
    std::iota(perm.begin(), perm.end(), 0);
    r.shuffle(perm);
    for (int u = 0; u < h.n; ++u)
      for (int v = 0; v < h.n; ++v) {
        if (u == v) continue;
        int gu = e[perm[u]], gv = e[perm[v]];
        covered[(size_t)gu * hg.n + gv] = 1;
        if (h.arc(u, v)) g.set_arc(gu, gv);
      }
  }
  if (mode.kind == ClassSpec::Kind::Gn)
    for (int u = 0; u < hg.n; ++u)
      for (int v = u + 1; v < hg.n; ++v)
        if (!covered[(size_t)u * hg.n + v]) g.set_arc(u, v);
  if (!validate_structure(g, mode))
    throw Error(ErrorKind::Validation, "planted structure failed class re-validation");
  return g;
}

HypergraphCheckReport qop_hypergraph_check(const FiniteStructure& h, const FiniteStructure& g,
                                           const Hypergraph& hg, const ClassSpec& mode,
                                           int order_samples, uint64_t seed) {
  require(order_samples >= 1, "need at least one sampled order");
  check_hyperedges(hg);
  if (h.n != hg.k) throw Error(ErrorKind::Param, "copy size must equal the hyperedge size");
  HypergraphCheckReport rep;
  rep.edges = (long)hg.edges.size();
  rep.aut = (long)automorphisms(h).size();
  rep.rho = Rat(1) / Rat(factorial(h.n));
  std::vector<VertexMap> embs;
  for (auto& e : hg.edges) {
    FiniteStructure sub = g.restrict_to(e);
    for (auto& phi : enumerate_embeddings(h, sub)) {
      VertexMap m(h.n);
      for (int i = 0; i < h.n; ++i) m[i] = e[phi[i]];
      embs.push_back(m);
    }
  }
  rep.n_emb = (long)embs.size();
  auto h_exps = enumerate_expansions(mode, h);
  double rho_d = 1.0 / to_double(factorial(h.n));
  Rng r(seed);
  std::vector<int> order(g.n), pos(g.n), induced(h.n);
  for (int s = 0; s < order_samples; ++s) {
    std::iota(order.begin(), order.end(), 0);
    r.shuffle(order);
    for (int i = 0; i < g.n; ++i) pos[order[i]] = i;
    std::vector<long> tally(h_exps.size(), 0);
    for (auto& phi : embs) {
      std::iota(induced.begin(), induced.end(), 0);
      std::sort(induced.begin(), induced.end(),
                [&](int a, int b) { return pos[phi[a]] < pos[phi[b]]; });
      size_t idx = 0;
      while (idx < h_exps.size() && h_exps[idx].order != induced) ++idx;
      if (idx == h_exps.size())
        throw Error(ErrorKind::Validation, "induced order escaped the expansion set");
      ++tally[idx];
    }
    if (s == 0) rep.first_tallies = tally;
    if (rep.n_emb > 0)
      for (long t : tally) {
        double dev = std::fabs((double)t / (double)rep.n_emb - rho_d);
        rep.max_deviation = std::max(rep.max_deviation, dev);
      }
  }
  return rep;
}

}  // namespace homoflow

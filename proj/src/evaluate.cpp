#include "netmpg/evaluate.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace netmpg {

Real tv_distance(const Vector& p, const Vector& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("tv_distance: length mismatch");
  if (std::abs(p.sum() - 1.0) > 1e-9 || std::abs(q.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("tv_distance: inputs must sum to 1 within 1e-9");
  if (p.minCoeff() < -1e-12 || q.minCoeff() < -1e-12)
    throw std::invalid_argument("tv_distance: inputs must be non-negative");
  const Real d = 0.5 * (p - q).cwiseAbs().sum();
  return std::min(std::max(d, 0.0), 1.0);
}

Real decay_bound(Real r_max, Real gamma, int kappa) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("decay_bound: gamma must lie in (0,1)");
  if (!(r_max > 0.0)) throw std::invalid_argument("decay_bound: r_max must be positive");
  if (kappa < 0) throw std::invalid_argument("decay_bound: kappa must be non-negative");
  return r_max / (1.0 - gamma) * std::pow(gamma, kappa + 1);
}

int mc_tail_window(Real gamma) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("mc_tail_window: gamma must lie in (0,1)");
  return std::max(1, static_cast<int>(std::ceil(std::log(0.02) / std::log(gamma))));
}

Real McLocalQ::estimate(Index k) const {
  auto it = acc.find(k);
  if (it == acc.end() || it->second.second == 0)
    throw std::out_of_range("McLocalQ::estimate: configuration unvisited");
  return it->second.first / static_cast<Real>(it->second.second);
}

// --- JointOracle -------------------------------------------------------------

JointOracle::JointOracle(const GameModel& model, Index cap)
    : model_(&model), cap_(cap) {
  n_ = model.num_agents();
  S_ = model.joint_state_count();
  A_ = model.joint_action_count();
  const bool infeasible = S_ < 0 || A_ < 0 || S_ > cap_ / A_;
  if (infeasible)
    throw std::runtime_error(
        "oracle infeasible: joint state-action table exceeds the cap of " +
        std::to_string(cap_) + " entries; use the Monte-Carlo estimation path");

  state_digits_.resize(static_cast<std::size_t>(S_));
  for (Index s = 0; s < S_; ++s)
    model.state_radix().decode(s, state_digits_[static_cast<std::size_t>(s)]);
  action_digits_.resize(static_cast<std::size_t>(A_));
  for (Index a = 0; a < A_; ++a)
    model.action_radix().decode(a, action_digits_[static_cast<std::size_t>(a)]);

  rewards_.assign(static_cast<std::size_t>(n_), Matrix(S_, A_));
  rows_.resize(static_cast<std::size_t>(S_ * A_));

  const auto& strides = model.state_radix().strides();
  constexpr Index kNnzBudget = 50'000'000;
  Index nnz = 0;

  std::vector<std::vector<std::pair<int, Real>>> supports(static_cast<std::size_t>(n_));
  std::vector<int> pos(static_cast<std::size_t>(n_));
  for (Index s = 0; s < S_; ++s) {
    const auto& sd = state_digits_[static_cast<std::size_t>(s)];
    for (Index a = 0; a < A_; ++a) {
      const auto& ad = action_digits_[static_cast<std::size_t>(a)];
      for (int i = 0; i < n_; ++i)
        rewards_[static_cast<std::size_t>(i)](s, a) = model.reward(i, sd, ad);

      // Per-agent successor supports, then their product via an odometer.
      for (int i = 0; i < n_; ++i) {
        const Vector row = model.transition_row(i, sd, ad);
        auto& sup = supports[static_cast<std::size_t>(i)];
        sup.clear();
        for (int v = 0; v < row.size(); ++v)
          if (row[v] > 0.0) sup.emplace_back(v, row[v]);
        if (sup.empty())
          throw std::runtime_error("JointOracle: kernel row has empty support");
      }
      auto& out = rows_[static_cast<std::size_t>(s * A_ + a)];
      std::fill(pos.begin(), pos.end(), 0);
      while (true) {
        Index idx = 0;
        Real p = 1.0;
        for (int i = 0; i < n_; ++i) {
          const auto& e = supports[static_cast<std::size_t>(i)][static_cast<std::size_t>(pos[i])];
          idx += strides[static_cast<std::size_t>(i)] * e.first;
          p *= e.second;
        }
        out.emplace_back(idx, p);
        int k = 0;
        while (k < n_) {
          if (++pos[static_cast<std::size_t>(k)] <
              static_cast<int>(supports[static_cast<std::size_t>(k)].size()))
            break;
          pos[static_cast<std::size_t>(k)] = 0;
          ++k;
        }
        if (k == n_) break;
      }
      nnz += static_cast<Index>(out.size());
      if (nnz > kNnzBudget)
        throw std::runtime_error(
            "oracle infeasible: joint kernel support exceeds the memory budget; "
            "use the Monte-Carlo estimation path");
    }
  }
}

Vector JointOracle::initial_distribution() const {
  const auto& mu = model_->mu();
  Vector d(S_);
  switch (mu.kind) {
    case InitialDistribution::Kind::Uniform:
      d.setConstant(1.0 / static_cast<Real>(S_));
      break;
    case InitialDistribution::Kind::Point:
      d.setZero();
      d[model_->state_radix().encode(mu.point)] = 1.0;
      break;
    case InitialDistribution::Kind::Product:
      for (Index s = 0; s < S_; ++s) {
        const auto& sd = state_digits_[static_cast<std::size_t>(s)];
        Real p = 1.0;
        for (int i = 0; i < n_; ++i)
          p *= mu.marginals[static_cast<std::size_t>(i)][sd[static_cast<std::size_t>(i)]];
        d[s] = p;
      }
      break;
  }
  return d;
}

JointOracle::PolicyContext JointOracle::make_context(const JointPolicy& policy) const {
  if (policy.num_agents() != n_)
    throw std::invalid_argument("JointOracle: policy agent count mismatch");
  PolicyContext ctx;
  ctx.agent_rows.reserve(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    const PolicyTable& t = policy.table(i);
    Matrix rows(S_, t.num_actions());
    for (Index s = 0; s < S_; ++s) {
      const Index obs = t.observation_index(state_digits_[static_cast<std::size_t>(s)]);
      rows.row(s) = t.distribution(obs).transpose();
    }
    ctx.agent_rows.push_back(std::move(rows));
  }
  ctx.joint_prob.resize(S_, A_);
  for (Index s = 0; s < S_; ++s) {
    for (Index a = 0; a < A_; ++a) {
      const auto& ad = action_digits_[static_cast<std::size_t>(a)];
      Real p = 1.0;
      for (int i = 0; i < n_; ++i)
        p *= ctx.agent_rows[static_cast<std::size_t>(i)](s, ad[static_cast<std::size_t>(i)]);
      ctx.joint_prob(s, a) = p;
    }
  }
  return ctx;
}

Eigen::SparseMatrix<Real, Eigen::RowMajor> JointOracle::policy_kernel(
    const PolicyContext& ctx) const {
  std::vector<Eigen::Triplet<Real>> trips;
  Vector tmp = Vector::Zero(S_);
  std::vector<Index> touched;
  for (Index s = 0; s < S_; ++s) {
    touched.clear();
    for (Index a = 0; a < A_; ++a) {
      const Real w = ctx.joint_prob(s, a);
      if (w == 0.0) continue;
      for (const auto& [idx, p] : rows_[static_cast<std::size_t>(s * A_ + a)]) {
        if (tmp[idx] == 0.0) touched.push_back(idx);
        tmp[idx] += w * p;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (Index idx : touched) {
      trips.emplace_back(static_cast<int>(s), static_cast<int>(idx), tmp[idx]);
      tmp[idx] = 0.0;
    }
  }
  Eigen::SparseMatrix<Real, Eigen::RowMajor> P(S_, S_);
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

Matrix JointOracle::solve_values(const PolicyContext& ctx, const EvalOptions& opts,
                                 Real* residual_out) const {
  const Real gamma = model_->gamma();
  Matrix Rpi(S_, n_);
  for (int i = 0; i < n_; ++i)
    Rpi.col(i) = (rewards_[static_cast<std::size_t>(i)].array() * ctx.joint_prob.array())
                     .rowwise()
                     .sum();
  const auto P = policy_kernel(ctx);

  Matrix V;
  if (opts.method == EvalOptions::Method::LinearSolve) {
    if (S_ > 10'000)
      throw std::runtime_error("exact_evaluate: linear solve limited to 1e4 joint states");
    const Eigen::SparseMatrix<Real> Pc(P);
    Eigen::SparseMatrix<Real> I(S_, S_);
    I.setIdentity();
    const Eigen::SparseMatrix<Real> M = I - gamma * Pc;
    Eigen::SparseLU<Eigen::SparseMatrix<Real>> lu(M);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("exact_evaluate: linear solve failed");
    V = lu.solve(Rpi);
  } else {
    V = (opts.warm_start != nullptr && opts.warm_start->rows() == S_ &&
         opts.warm_start->cols() == n_)
            ? *opts.warm_start
            : Matrix::Zero(S_, n_);
    constexpr int kMaxSweeps = 200'000;
    bool done = false;
    for (int it = 0; it < kMaxSweeps; ++it) {
      Matrix Vn = Rpi + gamma * (P * V);
      const Real delta = (Vn - V).cwiseAbs().maxCoeff();
      V.swap(Vn);
      if (delta <= opts.tol) {
        done = true;
        break;
      }
    }
    if (!done)
      throw std::runtime_error("exact_evaluate: value iteration did not reach tolerance");
  }
  if (residual_out != nullptr)
    *residual_out = (Rpi + gamma * (P * V) - V).cwiseAbs().maxCoeff();
  return V;
}

ExactTables JointOracle::evaluate(const JointPolicy& policy, const EvalOptions& opts) const {
  const PolicyContext ctx = make_context(policy);
  ExactTables tables;
  tables.V = solve_values(ctx, opts, &tables.bellman_residual);

  const Real gamma = model_->gamma();
  tables.Q.assign(static_cast<std::size_t>(n_), Matrix(S_, A_));
  tables.A.assign(static_cast<std::size_t>(n_), Matrix(S_, A_));
  std::vector<Real> acc(static_cast<std::size_t>(n_));
  for (Index s = 0; s < S_; ++s) {
    for (Index a = 0; a < A_; ++a) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (const auto& [idx, p] : rows_[static_cast<std::size_t>(s * A_ + a)])
        for (int i = 0; i < n_; ++i) acc[static_cast<std::size_t>(i)] += p * tables.V(idx, i);
      for (int i = 0; i < n_; ++i)
        tables.Q[static_cast<std::size_t>(i)](s, a) =
            rewards_[static_cast<std::size_t>(i)](s, a) + gamma * acc[static_cast<std::size_t>(i)];
    }
  }
  for (int i = 0; i < n_; ++i)
    tables.A[static_cast<std::size_t>(i)] =
        tables.Q[static_cast<std::size_t>(i)].colwise() - tables.V.col(i);
  return tables;
}

Vector JointOracle::state_visitation(const JointPolicy& policy) const {
  const PolicyContext ctx = make_context(policy);
  const auto P = policy_kernel(ctx);
  const Eigen::SparseMatrix<Real, Eigen::RowMajor> Pt = P.transpose();
  const Real gamma = model_->gamma();
  const Vector mu = initial_distribution();
  Vector d = mu;
  constexpr int kMaxSweeps = 400'000;
  for (int it = 0; it < kMaxSweeps; ++it) {
    Vector dn = (1.0 - gamma) * mu + gamma * (Pt * d);
    const Real delta = (dn - d).cwiseAbs().maxCoeff();
    d.swap(dn);
    if (delta <= 1e-14) return d;
  }
  throw std::runtime_error("state_visitation: iteration did not converge");
}

std::pair<Index, Index> JointOracle::local_split_dims(int agent, int kappa) const {
  const Neighborhood nb = model_->graph().kappa_neighborhood(agent, kappa);
  const SubsetSplit ss(model_->state_sizes(), nb.members);
  const SubsetSplit as(model_->action_sizes(), nb.members);
  return {ss.local().size() * as.local().size(), ss.exterior().size() * as.exterior().size()};
}

namespace {

struct SplitMaps {
  std::vector<Index> s_local, s_ext, a_local, a_ext;
  Index SL, SE, AL, AE;
};

SplitMaps make_split_maps(const GameModel& model, int agent, int kappa) {
  const Neighborhood nb = model.graph().kappa_neighborhood(agent, kappa);
  const SubsetSplit ss(model.state_sizes(), nb.members);
  const SubsetSplit as(model.action_sizes(), nb.members);
  SplitMaps m;
  m.SL = ss.local().size();
  m.SE = ss.exterior().size();
  m.AL = as.local().size();
  m.AE = as.exterior().size();
  const Index S = model.joint_state_count();
  const Index A = model.joint_action_count();
  m.s_local.resize(static_cast<std::size_t>(S));
  m.s_ext.resize(static_cast<std::size_t>(S));
  for (Index s = 0; s < S; ++s) {
    const auto [l, e] = ss.split(s);
    m.s_local[static_cast<std::size_t>(s)] = l;
    m.s_ext[static_cast<std::size_t>(s)] = e;
  }
  m.a_local.resize(static_cast<std::size_t>(A));
  m.a_ext.resize(static_cast<std::size_t>(A));
  for (Index a = 0; a < A; ++a) {
    const auto [l, e] = as.split(a);
    m.a_local[static_cast<std::size_t>(a)] = l;
    m.a_ext[static_cast<std::size_t>(a)] = e;
  }
  return m;
}

} // namespace

TruncationWeights JointOracle::visitation_weights(const JointPolicy& policy, int agent,
                                                  int kappa) const {
  const SplitMaps m = make_split_maps(*model_, agent, kappa);
  const PolicyContext ctx = make_context(policy);
  const Vector d = state_visitation(policy);

  TruncationWeights tw{agent, kappa, m.SL, m.AL, m.SE, m.AE,
                       Matrix::Zero(m.SL * m.AL, m.SE * m.AE)};
  for (Index s = 0; s < S_; ++s) {
    if (d[s] == 0.0) continue;
    const Index sl = m.s_local[static_cast<std::size_t>(s)];
    const Index se = m.s_ext[static_cast<std::size_t>(s)];
    for (Index a = 0; a < A_; ++a) {
      const Real nu = d[s] * ctx.joint_prob(s, a);
      if (nu == 0.0) continue;
      tw.w(sl * m.AL + m.a_local[static_cast<std::size_t>(a)],
           se * m.AE + m.a_ext[static_cast<std::size_t>(a)]) += nu;
    }
  }
  const Real uniform = 1.0 / static_cast<Real>(m.SE * m.AE);
  for (Index r = 0; r < tw.w.rows(); ++r) {
    const Real sum = tw.w.row(r).sum();
    if (sum > 0.0)
      tw.w.row(r) /= sum;
    else
      tw.w.row(r).setConstant(uniform);
  }
  return tw;
}

TruncationWeights JointOracle::uniform_weights(int agent, int kappa) const {
  const SplitMaps m = make_split_maps(*model_, agent, kappa);
  TruncationWeights tw{agent, kappa, m.SL, m.AL, m.SE, m.AE, Matrix()};
  tw.w = Matrix::Constant(m.SL * m.AL, m.SE * m.AE, 1.0 / static_cast<Real>(m.SE * m.AE));
  return tw;
}

StateWeights JointOracle::visitation_state_weights(const JointPolicy& policy, int agent,
                                                   int kappa) const {
  const SplitMaps m = make_split_maps(*model_, agent, kappa);
  const Vector d = state_visitation(policy);
  StateWeights sw{agent, kappa, Matrix::Zero(m.SL, m.SE)};
  for (Index s = 0; s < S_; ++s)
    sw.w(m.s_local[static_cast<std::size_t>(s)], m.s_ext[static_cast<std::size_t>(s)]) += d[s];
  const Real uniform = 1.0 / static_cast<Real>(m.SE);
  for (Index r = 0; r < sw.w.rows(); ++r) {
    const Real sum = sw.w.row(r).sum();
    if (sum > 0.0)
      sw.w.row(r) /= sum;
    else
      sw.w.row(r).setConstant(uniform);
  }
  return sw;
}

StateWeights JointOracle::uniform_state_weights(int agent, int kappa) const {
  const SplitMaps m = make_split_maps(*model_, agent, kappa);
  StateWeights sw{agent, kappa, Matrix()};
  sw.w = Matrix::Constant(m.SL, m.SE, 1.0 / static_cast<Real>(m.SE));
  return sw;
}

LocalQTable JointOracle::truncated_q(const ExactTables& tables,
                                     const TruncationWeights& weights) const {
  const SplitMaps m = make_split_maps(*model_, weights.agent, weights.kappa);
  const Matrix& Q = tables.Q.at(static_cast<std::size_t>(weights.agent));
  LocalQTable out{weights.agent, weights.kappa, Matrix::Zero(m.SL, m.AL)};
  for (Index s = 0; s < S_; ++s) {
    const Index sl = m.s_local[static_cast<std::size_t>(s)];
    const Index se = m.s_ext[static_cast<std::size_t>(s)];
    for (Index a = 0; a < A_; ++a) {
      const Index al = m.a_local[static_cast<std::size_t>(a)];
      const Index ae = m.a_ext[static_cast<std::size_t>(a)];
      out.q(sl, al) += weights.w(sl * m.AL + al, se * m.AE + ae) * Q(s, a);
    }
  }
  return out;
}

Vector JointOracle::truncated_v(const ExactTables& tables, const StateWeights& weights) const {
  const SplitMaps m = make_split_maps(*model_, weights.agent, weights.kappa);
  Vector out = Vector::Zero(m.SL);
  const auto& V = tables.V;
  for (Index s = 0; s < S_; ++s)
    out[m.s_local[static_cast<std::size_t>(s)]] +=
        weights.w(m.s_local[static_cast<std::size_t>(s)], m.s_ext[static_cast<std::size_t>(s)]) *
        V(s, weights.agent);
  return out;
}

DecayCertificate JointOracle::certify_decay(const ExactTables& tables, int agent,
                                            int kappa) const {
  const SplitMaps m = make_split_maps(*model_, agent, kappa);
  const Matrix& Q = tables.Q.at(static_cast<std::size_t>(agent));
  Vector lo = Vector::Constant(m.SL * m.AL, std::numeric_limits<Real>::infinity());
  Vector hi = Vector::Constant(m.SL * m.AL, -std::numeric_limits<Real>::infinity());
  for (Index s = 0; s < S_; ++s) {
    const Index sl = m.s_local[static_cast<std::size_t>(s)];
    for (Index a = 0; a < A_; ++a) {
      const Index row = sl * m.AL + m.a_local[static_cast<std::size_t>(a)];
      const Real q = Q(s, a);
      lo[row] = std::min(lo[row], q);
      hi[row] = std::max(hi[row], q);
    }
  }
  DecayCertificate cert{agent, kappa, (hi - lo).maxCoeff(),
                        decay_bound(model_->r_max(), model_->gamma(), kappa), false};
  cert.pass = cert.max_gap <= cert.bound + 1e-9;
  return cert;
}

TruncationCertificate JointOracle::certify_truncation(const ExactTables& tables,
                                                      const TruncationWeights& weights,
                                                      const LocalQTable& qhat) const {
  const SplitMaps m = make_split_maps(*model_, weights.agent, weights.kappa);
  const Matrix& Q = tables.Q.at(static_cast<std::size_t>(weights.agent));
  Real max_dev = 0.0;
  for (Index s = 0; s < S_; ++s) {
    const Index sl = m.s_local[static_cast<std::size_t>(s)];
    for (Index a = 0; a < A_; ++a) {
      const Index al = m.a_local[static_cast<std::size_t>(a)];
      max_dev = std::max(max_dev, std::abs(qhat.q(sl, al) - Q(s, a)));
    }
  }
  TruncationCertificate cert{weights.agent, weights.kappa, "",
                             max_dev,
                             decay_bound(model_->r_max(), model_->gamma(), weights.kappa),
                             false};
  cert.pass = cert.max_deviation <= cert.bound + 1e-9;
  return cert;
}

GradientGapCertificate JointOracle::certify_gradient_gap(const ExactTables& tables,
                                                         const LocalQTable& qhat,
                                                         const Vector& vhat,
                                                         const TruncationWeights& weights) const {
  const SplitMaps m = make_split_maps(*model_, weights.agent, weights.kappa);
  const Matrix& A = tables.A.at(static_cast<std::size_t>(weights.agent));
  Real max_dev = 0.0;
  for (Index s = 0; s < S_; ++s) {
    const Index sl = m.s_local[static_cast<std::size_t>(s)];
    for (Index a = 0; a < A_; ++a) {
      const Index al = m.a_local[static_cast<std::size_t>(a)];
      const Real ahat = qhat.q(sl, al) - vhat[sl];
      max_dev = std::max(max_dev, std::abs(ahat - A(s, a)));
    }
  }
  const Real gamma = model_->gamma();
  const Real r_max = model_->r_max();
  GradientGapCertificate cert;
  cert.agent = weights.agent;
  cert.kappa = weights.kappa;
  cert.max_advantage_deviation = max_dev;
  cert.advantage_bound = 2.0 * decay_bound(r_max, gamma, weights.kappa);
  cert.max_step_gap = max_dev / (1.0 - gamma);
  cert.step_bound_proof = cert.advantage_bound / (1.0 - gamma);
  cert.step_bound_statement = 2.0 * r_max / ((1.0 - gamma) * (1.0 - gamma));
  cert.pass = cert.max_advantage_deviation <= cert.advantage_bound + 1e-9 &&
              cert.max_step_gap <= cert.step_bound_proof + 1e-9 &&
              cert.max_step_gap <= cert.step_bound_statement + 1e-9;
  return cert;
}

Real JointOracle::nash_gap(const JointPolicy& policy, const ExactTables* tables) const {
  ExactTables local_tables;
  if (tables == nullptr) {
    local_tables = evaluate(policy);
    tables = &local_tables;
  }
  const PolicyContext ctx = make_context(policy);
  const Real gamma = model_->gamma();

  Real gap = 0.0;
  std::vector<std::vector<std::pair<Index, Real>>> br_rows;
  for (int i = 0; i < n_; ++i) {
    const int Ai = model_->action_sizes()[static_cast<std::size_t>(i)];
    Matrix rbar = Matrix::Zero(S_, Ai);
    br_rows.assign(static_cast<std::size_t>(S_ * Ai), {});

    std::vector<std::vector<Index>> touched(static_cast<std::size_t>(Ai));
    Matrix tmp_cols = Matrix::Zero(S_, Ai);
    for (Index s = 0; s < S_; ++s) {
      for (auto& t : touched) t.clear();
      for (Index a = 0; a < A_; ++a) {
        const auto& ad = action_digits_[static_cast<std::size_t>(a)];
        Real w = 1.0;
        for (int j = 0; j < n_; ++j)
          if (j != i) w *= ctx.agent_rows[static_cast<std::size_t>(j)](s, ad[static_cast<std::size_t>(j)]);
        if (w == 0.0) continue;
        const int ai = ad[static_cast<std::size_t>(i)];
        rbar(s, ai) += w * rewards_[static_cast<std::size_t>(i)](s, a);
        for (const auto& [idx, p] : rows_[static_cast<std::size_t>(s * A_ + a)]) {
          if (tmp_cols(idx, ai) == 0.0) touched[static_cast<std::size_t>(ai)].push_back(idx);
          tmp_cols(idx, ai) += w * p;
        }
      }
      for (int ai = 0; ai < Ai; ++ai) {
        auto& t = touched[static_cast<std::size_t>(ai)];
        std::sort(t.begin(), t.end());
        auto& row = br_rows[static_cast<std::size_t>(s * Ai + ai)];
        row.reserve(t.size());
        for (Index idx : t) {
          row.emplace_back(idx, tmp_cols(idx, ai));
          tmp_cols(idx, ai) = 0.0;
        }
      }
    }

    // Best-response value iteration.
    Vector V = Vector::Zero(S_);
    constexpr int kMaxSweeps = 200'000;
    bool done = false;
    for (int it = 0; it < kMaxSweeps; ++it) {
      Real delta = 0.0;
      for (Index s = 0; s < S_; ++s) {
        Real best = -std::numeric_limits<Real>::infinity();
        for (int ai = 0; ai < Ai; ++ai) {
          Real q = rbar(s, ai);
          for (const auto& [idx, p] : br_rows[static_cast<std::size_t>(s * Ai + ai)])
            q += gamma * p * V[idx];
          best = std::max(best, q);
        }
        delta = std::max(delta, std::abs(best - V[s]));
        V[s] = best;
      }
      if (delta <= 1e-12) {
        done = true;
        break;
      }
    }
    if (!done) throw std::runtime_error("nash_gap: best-response iteration did not converge");

    gap = std::max(gap, (V - tables->V.col(i)).maxCoeff());
  }
  return std::max(gap, 0.0);
}

ExactAdvantages JointOracle::exact_advantages(const JointPolicy& policy,
                                              const EvalOptions& opts) const {
  ExactAdvantages out;
  out.tables = evaluate(policy, opts);
  out.visitation = state_visitation(policy);
  const PolicyContext ctx = make_context(policy);

  out.per_agent.reserve(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) {
    const PolicyTable& t = policy.table(i);
    const int Ai = t.num_actions();
    // Observation index of each joint state under this agent's kappa view.
    std::vector<Index> obs_of_state(static_cast<std::size_t>(S_));
    for (Index s = 0; s < S_; ++s)
      obs_of_state[static_cast<std::size_t>(s)] =
          t.observation_index(state_digits_[static_cast<std::size_t>(s)]);

    Matrix acc_q = Matrix::Zero(t.num_observations(), Ai);
    Matrix acc_w = Matrix::Zero(t.num_observations(), Ai);
    const Matrix& Q = out.tables.Q[static_cast<std::size_t>(i)];
    for (Index s = 0; s < S_; ++s) {
      const Real ds = out.visitation[s];
      if (ds == 0.0) continue;
      const Index obs = obs_of_state[static_cast<std::size_t>(s)];
      for (Index a = 0; a < A_; ++a) {
        const Real nu = ds * ctx.joint_prob(s, a);
        if (nu == 0.0) continue;
        const int ai = action_digits_[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)];
        acc_q(obs, ai) += nu * Q(s, a);
        acc_w(obs, ai) += nu;
      }
    }

    AdvantageEstimate est{i, policy.kappa(), {}};
    for (Index obs = 0; obs < acc_q.rows(); ++obs) {
      Real vhat = 0.0, pmass = 0.0;
      const Vector pi = t.distribution(obs);
      for (int ai = 0; ai < Ai; ++ai) {
        if (acc_w(obs, ai) > 0.0) {
          vhat += pi[ai] * (acc_q(obs, ai) / acc_w(obs, ai));
          pmass += pi[ai];
        }
      }
      if (pmass == 0.0) continue;
      vhat /= pmass;
      for (int ai = 0; ai < Ai; ++ai)
        if (acc_w(obs, ai) > 0.0)
          est.entries.push_back({obs, ai, acc_q(obs, ai) / acc_w(obs, ai) - vhat});
    }
    out.per_agent.push_back(std::move(est));
  }
  return out;
}

// --- Free-function surface ---------------------------------------------------

ExactTables exact_evaluate(const GameModel& model, const JointPolicy& policy,
                           Index oracle_cap, const EvalOptions& opts) {
  return JointOracle(model, oracle_cap).evaluate(policy, opts);
}

TruncationWeights visitation_weights(const GameModel& model, const JointPolicy& policy,
                                     int agent, int kappa, Index oracle_cap) {
  return JointOracle(model, oracle_cap).visitation_weights(policy, agent, kappa);
}

LocalQTable truncated_q(const GameModel& model, const ExactTables& tables,
                        const TruncationWeights& weights, Index oracle_cap) {
  return JointOracle(model, oracle_cap).truncated_q(tables, weights);
}

DecayCertificate certify_decay(const GameModel& model, const JointPolicy& policy,
                               int agent, int kappa, Index oracle_cap) {
  const JointOracle oracle(model, oracle_cap);
  const ExactTables tables = oracle.evaluate(policy);
  return oracle.certify_decay(tables, agent, kappa);
}

Real nash_gap(const GameModel& model, const JointPolicy& policy, Index oracle_cap) {
  return JointOracle(model, oracle_cap).nash_gap(policy);
}

McLocalQ mc_local_q(const GameModel& model, const JointPolicy& policy, int agent,
                    int kappa, int episodes, int horizon, std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("mc_local_q: episodes must be >= 1");
  const Neighborhood nb = model.graph().kappa_neighborhood(agent, kappa);
  std::vector<int> s_sizes, a_sizes;
  for (int j : nb.members) {
    s_sizes.push_back(model.state_sizes()[static_cast<std::size_t>(j)]);
    a_sizes.push_back(model.action_sizes()[static_cast<std::size_t>(j)]);
  }
  const MixedRadix s_rad(s_sizes), a_rad(a_sizes);

  McLocalQ out;
  out.agent = agent;
  out.kappa = kappa;
  out.num_local_states = s_rad.size();
  out.num_local_actions = a_rad.size();

  const Real gamma = model.gamma();
  const int usable = std::max(1, horizon - mc_tail_window(gamma));
  std::vector<int> sv(nb.members.size()), av(nb.members.size());
  for (int e = 0; e < episodes; ++e) {
    const Trajectory traj = sample_trajectory(
        model, policy, horizon, derive_seed(seed, {0xE5DULL, static_cast<std::uint64_t>(e)}));
    // Return-to-go for this agent.
    Vector g(horizon);
    Real acc = 0.0;
    for (int t = horizon - 1; t >= 0; --t) {
      acc = traj.rewards(t, agent) + gamma * acc;
      g[t] = acc;
    }
    for (int t = 0; t < usable; ++t) {
      for (std::size_t k = 0; k < nb.members.size(); ++k) {
        sv[k] = traj.states[static_cast<std::size_t>(t)][static_cast<std::size_t>(nb.members[k])];
        av[k] = traj.actions[static_cast<std::size_t>(t)][static_cast<std::size_t>(nb.members[k])];
      }
      const Index key = out.key(s_rad.encode(sv), a_rad.encode(av));
      auto& slot = out.acc[key];
      slot.first += g[t];
      slot.second += 1;
    }
  }
  return out;
}

} // namespace netmpg

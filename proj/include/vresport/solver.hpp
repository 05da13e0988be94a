#pragma once

// Conic primal-dual interior-point solver for the portfolio programs:
//
//   minimize    c'x  [+ q0(x)]
//   subject to  q1(x) <= bound           (optional, convex quadratic)
//               G x <= h,  A x = b,  x >= lower
//
// with q(x) = x'Qx + 2 g'x + h over the leading "core" variables. Quadratic
// terms become rotated second-order cones (q0 through an epigraph variable),
// linear rows and bounds the nonnegative orthant. The iteration is the
// homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
// predictor-corrector, so infeasible and unbounded programs end in a
// certificate instead of a separate feasibility phase.
//
// Variables past `n_core` are auxiliaries that may only appear in linear
// rows; rows touching at most one auxiliary are eliminated exactly, so
// thousands of sampled risk rows cost O(rows * core^2) per iteration instead
// of a dense solve. Rows touching several auxiliaries (the CVaR budget row)
// keep an explicit multiplier in the reduced system instead.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vresport/errors.hpp"

namespace vresport {

inline constexpr double kUnbounded = -std::numeric_limits<double>::infinity();

/// x'Qx + 2 g'x + h over the first Q.rows() variables.
struct QuadraticForm {
  Eigen::MatrixXd Q;
  Eigen::VectorXd g;
  double h = 0.0;

  Eigen::Index size() const { return Q.rows(); }

  double value(const Eigen::VectorXd& x) const {
    const auto head = x.head(Q.rows());
    const double lin = g.size() ? 2.0 * g.dot(head) : 0.0;
    return head.dot(Q * head) + lin + h;
  }
};

struct QuadConstraint {
  QuadraticForm form;
  double bound = 0.0;  // form(x) <= bound
};

/// One linear row: core'x[0:n_core] + sum(aux values) (<= or ==) rhs.
struct LinearRow {
  Eigen::VectorXd core;                                 // size n_core, or empty for none
  std::vector<std::pair<Eigen::Index, double>> aux;     // absolute variable indices >= n_core
  double rhs = 0.0;

  double eval(const Eigen::VectorXd& x) const {
    double v = core.size() ? core.dot(x.head(core.size())) : 0.0;
    for (const auto& [j, a] : aux) v += a * x[j];
    return v;
  }
};

struct ConvexProgram {
  Eigen::Index n_vars = 0;
  Eigen::Index n_core = 0;
  Eigen::VectorXd objective;                      // linear part, size n_vars
  std::optional<QuadraticForm> quadratic_objective;
  std::optional<QuadConstraint> quad_constraint;
  std::vector<LinearRow> eq_rows;                 // core-only
  std::vector<LinearRow> ineq_rows;               // row <= rhs
  Eigen::VectorXd lower;                          // kUnbounded for free variables
  std::vector<std::string> names;                 // optional, for dumps

  double objective_value(const Eigen::VectorXd& x) const {
    double v = objective.dot(x);
    if (quadratic_objective) v += quadratic_objective->value(x);
    return v;
  }
};

enum class SolveStatus { optimal, infeasible, unbounded, max_iter };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

struct KktResiduals {
  double primal = 0.0;           // relative primal residual
  double dual = 0.0;             // relative dual residual
  double complementarity = 0.0;  // duality gap, relative to the objective
};

struct Solution {
  Eigen::VectorXd x;
  double objective = 0.0;
  SolveStatus status = SolveStatus::max_iter;
  KktResiduals kkt;
  int iterations = 0;
};

struct SolverOptions {
  double target_tol = 1e-8;
  double accept_tol = 1e-6;
  int max_iter = 200;
};

namespace solver_detail {

/// Rotated cone ||L x||^2 <= u(x), stored as s = h - G x with
/// s = (u + 1, u - 1, 2 L x) in the second-order cone.
struct Soc {
  Eigen::MatrixXd G;  // dim x nc
  Eigen::VectorXd h;  // dim
  Eigen::Index dim() const { return h.size(); }
};

/// Scaled internal form. Linear inequalities are unit-norm rows g'x <= h.
struct Scaled {
  Eigen::Index n = 0, nc = 0;  // nc includes an objective epigraph variable when present
  Eigen::Index n_user = 0;     // variables of the original program
  Eigen::VectorXd c;
  double obj_scale = 1.0;

  std::vector<LinearRow> rows;  // normalized
  std::vector<std::size_t> multi_rows;
  std::vector<std::size_t> core_rows;  // rows without auxiliaries
  std::vector<std::vector<std::size_t>> aux_rows;  // per aux var, single-aux rows touching it

  Eigen::MatrixXd A;  // m_eq x nc, normalized
  Eigen::VectorXd b;

  std::vector<std::pair<Eigen::Index, double>> bounds;  // (var, lower)
  std::vector<Eigen::Index> aux_bound;                 // per aux var: index into bounds or -1

  std::vector<Soc> socs;

  Eigen::Index n_lp() const { return static_cast<Eigen::Index>(rows.size() + bounds.size()); }
  Eigen::Index n_cone() const {
    Eigen::Index m = n_lp();
    for (const auto& q : socs) m += q.dim();
    return m;
  }
};

inline Eigen::VectorXd embed(const Eigen::VectorXd& g, Eigen::Index size_q, Eigen::Index nc) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(nc);
  if (g.size()) out.head(size_q) = g;
  return out;
}

inline double row_norm(const LinearRow& r) {
  double s = r.core.size() ? r.core.squaredNorm() : 0.0;
  for (const auto& [j, a] : r.aux) s += a * a;
  return std::sqrt(s);
}

inline void check_program(const ConvexProgram& p) {
  if (p.n_core < 0 || p.n_core > p.n_vars) throw Error("solver: n_core out of range");
  if (p.objective.size() != p.n_vars) throw Error("solver: objective size mismatch");
  if (p.lower.size() != p.n_vars) throw Error("solver: lower bound size mismatch");
  auto check_row = [&](const LinearRow& r, bool eq) {
    if (r.core.size() != 0 && r.core.size() != p.n_core) throw Error("solver: row core size mismatch");
    for (const auto& [j, a] : r.aux) {
      if (j < p.n_core || j >= p.n_vars) throw Error("solver: row references a non-existent auxiliary variable");
      if (eq) throw Error("solver: equality rows may only use core variables");
    }
  };
  for (const auto& r : p.eq_rows) check_row(r, true);
  for (const auto& r : p.ineq_rows) check_row(r, false);
  auto check_form = [&](const QuadraticForm& f) {
    if (f.Q.rows() != f.Q.cols() || f.Q.rows() > p.n_core) throw Error("solver: quadratic form must be square over core");
    if (f.g.size() != 0 && f.g.size() != f.Q.rows()) throw Error("solver: quadratic form linear term size mismatch");
  };
  if (p.quad_constraint) check_form(p.quad_constraint->form);
  if (p.quadratic_objective) check_form(*p.quadratic_objective);
}

inline void classify(Scaled& s) {
  s.core_rows.clear();
  s.multi_rows.clear();
  s.aux_rows.assign(static_cast<std::size_t>(s.n - s.nc), {});
  s.aux_bound.assign(static_cast<std::size_t>(s.n - s.nc), -1);
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    const auto& r = s.rows[k];
    if (r.aux.empty()) s.core_rows.push_back(k);
    else if (r.aux.size() == 1) s.aux_rows[static_cast<std::size_t>(r.aux.front().first - s.nc)].push_back(k);
    else s.multi_rows.push_back(k);
  }
  for (std::size_t b = 0; b < s.bounds.size(); ++b) {
    const auto j = s.bounds[b].first;
    if (j >= s.nc) s.aux_bound[static_cast<std::size_t>(j - s.nc)] = static_cast<Eigen::Index>(b);
  }
}

/// Copies a row into a layout with `extra` core slots inserted at `at`
/// (auxiliary indices shift by `extra`), scaled to unit norm.
inline LinearRow normalized(const LinearRow& r, Eigen::Index nc_user, Eigen::Index extra) {
  LinearRow out;
  out.core = Eigen::VectorXd::Zero(nc_user + extra);
  if (r.core.size()) out.core.head(nc_user) = r.core;
  for (const auto& [j, a] : r.aux) out.aux.emplace_back(j + extra, a);
  out.rhs = r.rhs;
  const double norm = row_norm(r);
  if (norm > 0.0) {
    out.core /= norm;
    for (auto& [j, a] : out.aux) a /= norm;
    out.rhs /= norm;
  }
  return out;
}

/// Q = L'L for a PSD Q; directions with negligible curvature are dropped.
inline Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& Q) {
  if (Q.size() == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::MatrixXd sym = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd& ev = eig.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  if (ev.minCoeff() < -1e-8 * std::max(top, 1e-300)) throw Error("solver: quadratic form is not positive semidefinite");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > 1e-14 * top) keep.push_back(i);
  }
  Eigen::MatrixXd L(static_cast<Eigen::Index>(keep.size()), Q.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = keep[k];
    L.row(static_cast<Eigen::Index>(k)) = std::sqrt(ev[i]) * eig.eigenvectors().col(i).transpose();
  }
  return L;
}

/// ||L x||^2 <= u0 + a'x as a rotated cone over nc core variables.
inline Soc rotated_cone(const Eigen::MatrixXd& L, Eigen::Index nc, double u0, const Eigen::VectorXd& a) {
  Soc q;
  const Eigen::Index r = L.rows();
  q.G = Eigen::MatrixXd::Zero(r + 2, nc);
  q.h = Eigen::VectorXd::Zero(r + 2);
  q.G.row(0) = -a.transpose();
  q.G.row(1) = -a.transpose();
  q.h[0] = u0 + 1.0;
  q.h[1] = u0 - 1.0;
  if (r) q.G.block(2, 0, r, L.cols()) = -2.0 * L;
  return q;
}

inline Scaled make_scaled(const ConvexProgram& p) {
  Scaled s;
  const Eigen::Index extra = p.quadratic_objective ? 1 : 0;
  const Eigen::Index nc_user = p.n_core;
  s.n_user = p.n_vars;
  s.n = p.n_vars + extra;
  s.nc = p.n_core + extra;
  const Eigen::Index epi = nc_user;  // epigraph slot

  double scale = p.objective.size() ? p.objective.lpNorm<Eigen::Infinity>() : 0.0;
  if (p.quadratic_objective) {
    const auto& f = *p.quadratic_objective;
    if (f.Q.size()) scale = std::max(scale, f.Q.cwiseAbs().maxCoeff());
    if (f.g.size()) scale = std::max(scale, f.g.lpNorm<Eigen::Infinity>());
  }
  s.obj_scale = scale > 0.0 ? scale : 1.0;
  auto place = [&](Eigen::Index j) { return j >= nc_user ? j + extra : j; };
  s.c = Eigen::VectorXd::Zero(s.n);
  for (Eigen::Index j = 0; j < p.n_vars; ++j) s.c[place(j)] = p.objective[j] / s.obj_scale;

  for (const auto& r : p.ineq_rows) {
    if (row_norm(r) == 0.0) {
      if (r.rhs < 0.0) throw Error("solver: empty inequality row with negative right-hand side");
      continue;
    }
    s.rows.push_back(normalized(r, nc_user, extra));
  }
  std::vector<LinearRow> eqs;
  for (const auto& r : p.eq_rows) {
    if (row_norm(r) == 0.0) {
      if (r.rhs != 0.0) throw Error("solver: empty equality row with non-zero right-hand side");
      continue;
    }
    eqs.push_back(normalized(r, nc_user, extra));
  }
  s.A.resize(static_cast<Eigen::Index>(eqs.size()), s.nc);
  s.b.resize(static_cast<Eigen::Index>(eqs.size()));
  for (std::size_t i = 0; i < eqs.size(); ++i) {
    s.A.row(static_cast<Eigen::Index>(i)) = eqs[i].core.transpose();
    s.b[static_cast<Eigen::Index>(i)] = eqs[i].rhs;
  }
  for (Eigen::Index j = 0; j < p.n_vars; ++j) {
    if (std::isfinite(p.lower[j])) s.bounds.emplace_back(place(j), p.lower[j]);
  }

  if (p.quadratic_objective) {
    // q0(x) <= t, objective gains t (the constant of q0 is added back on output)
    const auto& f = *p.quadratic_objective;
    const Eigen::Index nq = f.Q.rows();
    const Eigen::MatrixXd L = psd_factor(f.Q / s.obj_scale);
    Eigen::MatrixXd Lc = Eigen::MatrixXd::Zero(L.rows(), s.nc);
    Lc.leftCols(nq) = L;
    Eigen::VectorXd a = -2.0 * embed(f.g, nq, s.nc) / s.obj_scale;
    a[epi] = 1.0;
    s.socs.push_back(rotated_cone(Lc, s.nc, 0.0, a));
    s.c[epi] = 1.0;
  }
  if (p.quad_constraint) {
    const auto& qc = *p.quad_constraint;
    const Eigen::Index nq = qc.form.Q.rows();
    const double avg_diag = nq ? qc.form.Q.trace() / static_cast<double>(nq) : 0.0;
    double qs = std::max(std::abs(qc.bound - qc.form.h), 1e-9 * std::abs(avg_diag));
    if (!(qs > 0.0)) qs = 1.0;
    const Eigen::MatrixXd L = psd_factor(qc.form.Q / qs);
    Eigen::MatrixXd Lc = Eigen::MatrixXd::Zero(L.rows(), s.nc);
    Lc.leftCols(nq) = L;
    const Eigen::VectorXd a = -2.0 * embed(qc.form.g, nq, s.nc) / qs;
    s.socs.push_back(rotated_cone(Lc, s.nc, (qc.bound - qc.form.h) / qs, a));
  }
  classify(s);
  return s;
}

// ---------------------------------------------------------------------------
// Cone algebra. The cone vector is laid out as [rows | bounds | soc blocks].

struct Layout {
  Eigen::Index lp = 0;
  std::vector<Eigen::Index> off, dim;
  Eigen::Index total = 0;
  double degree = 0.0;
};

inline Layout layout_of(const Scaled& s) {
  Layout l;
  l.lp = s.n_lp();
  Eigen::Index at = l.lp;
  for (const auto& q : s.socs) {
    l.off.push_back(at);
    l.dim.push_back(q.dim());
    at += q.dim();
  }
  l.total = at;
  l.degree = static_cast<double>(l.lp + static_cast<Eigen::Index>(s.socs.size()));
  return l;
}

/// Identity element of the cone.
inline Eigen::VectorXd cone_unit(const Layout& l) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(l.total);
  e.head(l.lp).setOnes();
  for (auto o : l.off) e[o] = 1.0;
  return e;
}

/// Smallest a with v + a e in the cone (negative when v is interior).
inline double cone_violation(const Layout& l, const Eigen::VectorXd& v) {
  double a = l.lp ? -v.head(l.lp).minCoeff() : -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < l.off.size(); ++k) {
    const auto seg = v.segment(l.off[k], l.dim[k]);
    a = std::max(a, seg.tail(l.dim[k] - 1).norm() - seg[0]);
  }
  return a;
}

/// Jordan product u o v.
inline Eigen::VectorXd cone_product(const Layout& l, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(l.total);
  out.head(l.lp) = u.head(l.lp).cwiseProduct(v.head(l.lp));
  for (std::size_t k = 0; k < l.off.size(); ++k) {
    const auto o = l.off[k], d = l.dim[k];
    const auto us = u.segment(o, d), vs = v.segment(o, d);
    out[o] = us.dot(vs);
    out.segment(o + 1, d - 1) = us[0] * vs.tail(d - 1) + vs[0] * us.tail(d - 1);
  }
  return out;
}

/// Solves lam o x = v for x.
inline Eigen::VectorXd cone_divide(const Layout& l, const Eigen::VectorXd& lam, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(l.total);
  out.head(l.lp) = v.head(l.lp).cwiseQuotient(lam.head(l.lp));
  for (std::size_t k = 0; k < l.off.size(); ++k) {
    const auto o = l.off[k], d = l.dim[k];
    const auto ls = lam.segment(o, d), vs = v.segment(o, d);
    const double det = ls[0] * ls[0] - ls.tail(d - 1).squaredNorm();
    const double x0 = (ls[0] * vs[0] - ls.tail(d - 1).dot(vs.tail(d - 1))) / det;
    out[o] = x0;
    out.segment(o + 1, d - 1) = (vs.tail(d - 1) - x0 * ls.tail(d - 1)) / ls[0];
  }
  return out;
}

/// Largest step a with v + a dv in the cone (capped at `cap`).
inline double max_step(const Layout& l, const Eigen::VectorXd& v, const Eigen::VectorXd& dv, double cap) {
  double a = cap;
  for (Eigen::Index k = 0; k < l.lp; ++k) {
    if (dv[k] < 0.0) a = std::min(a, -v[k] / dv[k]);
  }
  for (std::size_t k = 0; k < l.off.size(); ++k) {
    const auto o = l.off[k], d = l.dim[k];
    const auto u = v.segment(o, d), du = dv.segment(o, d);
    const double qa = du[0] * du[0] - du.tail(d - 1).squaredNorm();
    const double qb = 2.0 * (u[0] * du[0] - u.tail(d - 1).dot(du.tail(d - 1)));
    const double qc = std::max(u[0] * u[0] - u.tail(d - 1).squaredNorm(), 0.0);
    const double disc = qb * qb - 4.0 * qa * qc;
    // first positive root of qa a^2 + qb a + qc (positive at 0)
    double root = std::numeric_limits<double>::infinity();
    if (qa == 0.0) {
      if (qb < 0.0) root = -qc / qb;
    } else if (disc >= 0.0) {
      const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
      if (q != 0.0) {
        for (double r : {q / qa, qc / q}) {
          if (r > 0.0) root = std::min(root, r);
        }
      }
    }
    if (du[0] < 0.0) root = std::min(root, -u[0] / du[0]);
    a = std::min(a, root);
  }
  return a;
}

/// Nesterov-Todd scaling W (W z = W^-1 s = lambda).
struct Scaling {
  Eigen::VectorXd lp;                  // diagonal part
  std::vector<Eigen::MatrixXd> W, Winv;  // per SOC block, symmetric
  Eigen::VectorXd lambda;

  Eigen::VectorXd apply(const Layout& l, const Eigen::VectorXd& v, bool inverse) const {
    Eigen::VectorXd out(l.total);
    if (inverse) out.head(l.lp) = v.head(l.lp).cwiseQuotient(lp);
    else out.head(l.lp) = v.head(l.lp).cwiseProduct(lp);
    for (std::size_t k = 0; k < l.off.size(); ++k) {
      out.segment(l.off[k], l.dim[k]) = (inverse ? Winv[k] : W[k]) * v.segment(l.off[k], l.dim[k]);
    }
    return out;
  }
};

inline Scaling nt_scaling(const Layout& l, const Eigen::VectorXd& s, const Eigen::VectorXd& z) {
  Scaling w;
  w.lp = s.head(l.lp).cwiseQuotient(z.head(l.lp)).cwiseSqrt();
  for (std::size_t k = 0; k < l.off.size(); ++k) {
    const auto o = l.off[k], d = l.dim[k];
    const auto ss = s.segment(o, d), zz = z.segment(o, d);
    const double sn = std::sqrt(std::max(ss[0] * ss[0] - ss.tail(d - 1).squaredNorm(), 1e-300));
    const double zn = std::sqrt(std::max(zz[0] * zz[0] - zz.tail(d - 1).squaredNorm(), 1e-300));
    const Eigen::VectorXd sb = ss / sn, zb = zz / zn;
    const double gamma = std::sqrt(std::max((1.0 + sb.dot(zb)) / 2.0, 1e-300));
    Eigen::VectorXd wb(d);
    wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
    wb.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
    const double eta = std::sqrt(sn / zn);
    Eigen::MatrixXd M(d, d), Mi(d, d);
    const Eigen::VectorXd w1 = wb.tail(d - 1);
    const Eigen::MatrixXd inner =
        Eigen::MatrixXd::Identity(d - 1, d - 1) + w1 * w1.transpose() / (1.0 + wb[0]);
    M(0, 0) = wb[0];
    M.block(0, 1, 1, d - 1) = w1.transpose();
    M.block(1, 0, d - 1, 1) = w1;
    M.bottomRightCorner(d - 1, d - 1) = inner;
    Mi = M;
    Mi.block(0, 1, 1, d - 1) *= -1.0;
    Mi.block(1, 0, d - 1, 1) *= -1.0;
    w.W.push_back(eta * M);
    w.Winv.push_back(Mi / eta);
  }
  w.lambda = w.apply(l, z, false);
  return w;
}

// ---------------------------------------------------------------------------
// Newton system  [0 A' G'; A 0 0; G 0 -W'W] with the cone block eliminated:
// (G' W^-2 G) dx + A' dy = rx + G' W^-2 rz,  A dx = ry.

class Kkt {
 public:
  explicit Kkt(const Scaled& s) : s_(s), l_(layout_of(s)) {
    R_ = s.rows.size();
    B_ = s.bounds.size();
  }

  const Layout& layout() const { return l_; }

  /// G x (cone-sized).
  Eigen::VectorXd G(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(l_.total);
    for (std::size_t k = 0; k < R_; ++k) out[static_cast<Eigen::Index>(k)] = s_.rows[k].eval(x);
    for (std::size_t b = 0; b < B_; ++b) out[static_cast<Eigen::Index>(R_ + b)] = -x[s_.bounds[b].first];
    for (std::size_t k = 0; k < s_.socs.size(); ++k) {
      out.segment(l_.off[k], l_.dim[k]) = s_.socs[k].G * x.head(s_.nc);
    }
    return out;
  }

  /// G' z (variable-sized).
  Eigen::VectorXd Gt(const Eigen::VectorXd& z) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(s_.n);
    for (std::size_t k = 0; k < R_; ++k) {
      const double zk = z[static_cast<Eigen::Index>(k)];
      if (zk == 0.0) continue;
      const auto& r = s_.rows[k];
      out.head(s_.nc) += zk * r.core;
      for (const auto& [j, a] : r.aux) out[j] += zk * a;
    }
    for (std::size_t b = 0; b < B_; ++b) out[s_.bounds[b].first] -= z[static_cast<Eigen::Index>(R_ + b)];
    for (std::size_t k = 0; k < s_.socs.size(); ++k) {
      out.head(s_.nc) += s_.socs[k].G.transpose() * z.segment(l_.off[k], l_.dim[k]);
    }
    return out;
  }

  Eigen::VectorXd h() const {
    Eigen::VectorXd out(l_.total);
    for (std::size_t k = 0; k < R_; ++k) out[static_cast<Eigen::Index>(k)] = s_.rows[k].rhs;
    for (std::size_t b = 0; b < B_; ++b) out[static_cast<Eigen::Index>(R_ + b)] = -s_.bounds[b].second;
    for (std::size_t k = 0; k < s_.socs.size(); ++k) out.segment(l_.off[k], l_.dim[k]) = s_.socs[k].h;
    return out;
  }

  /// W^-1 G dx, the constraint map in NT-scaled coordinates.
  Eigen::VectorXd scaled_G(const Eigen::VectorXd& dx) const {
    Eigen::VectorXd out(l_.total);
    for (std::size_t k = 0; k < R_; ++k) out[static_cast<Eigen::Index>(k)] = s_.rows[k].eval(dx);
    for (std::size_t b = 0; b < B_; ++b) out[static_cast<Eigen::Index>(R_ + b)] = -dx[s_.bounds[b].first];
    out.head(l_.lp) = out.head(l_.lp).cwiseProduct(winv_lp_);
    for (std::size_t k = 0; k < Gs_.size(); ++k) out.segment(l_.off[k], l_.dim[k]) = Gs_[k] * dx.head(s_.nc);
    return out;
  }

  /// (W^-1 G)' v.
  Eigen::VectorXd scaled_Gt(const Eigen::VectorXd& v) const {
    Eigen::VectorXd lp = Eigen::VectorXd::Zero(l_.total);
    lp.head(l_.lp) = v.head(l_.lp).cwiseProduct(winv_lp_);
    Eigen::VectorXd out = Gt(lp);
    for (std::size_t k = 0; k < Gs_.size(); ++k) out.head(s_.nc) += Gs_[k].transpose() * v.segment(l_.off[k], l_.dim[k]);
    return out;
  }

  void factor(const Scaling& w) {
    const Eigen::Index nc = s_.nc;
    const Eigen::Index na = s_.n - nc;
    winv_lp_ = w.lp.cwiseInverse();
    const Eigen::VectorXd wt = winv_lp_.cwiseProduct(winv_lp_);
    Gs_.clear();
    S_.setZero(nc, nc);
    for (std::size_t k = 0; k < s_.socs.size(); ++k) {
      Gs_.push_back(w.Winv[k] * s_.socs[k].G);
      S_.noalias() += Gs_.back().transpose() * Gs_.back();
    }
    Eigen::MatrixXd K = S_;
    for (auto k : s_.core_rows) {
      const auto& a = s_.rows[k].core;
      K.noalias() += wt[static_cast<Eigen::Index>(k)] * a * a.transpose();
    }
    for (std::size_t b = 0; b < B_; ++b) {
      const auto j = s_.bounds[b].first;
      if (j < nc) K(j, j) += wt[static_cast<Eigen::Index>(R_ + b)];
    }
    D_.resize(na);
    U_.setZero(nc, na);
    for (Eigen::Index z = 0; z < na; ++z) {
      const auto bi = s_.aux_bound[static_cast<std::size_t>(z)];
      const double wb = bi >= 0 ? wt[static_cast<Eigen::Index>(R_) + bi] : 0.0;
      const auto& rows = s_.aux_rows[static_cast<std::size_t>(z)];
      double d = wb;
      for (auto k : rows) {
        const double v = s_.rows[k].aux.front().second;
        d += wt[static_cast<Eigen::Index>(k)] * v * v;
        U_.col(z) += wt[static_cast<Eigen::Index>(k)] * v * s_.rows[k].core;
      }
      if (!(d > 0.0)) {
        D_[z] = 1.0;
        U_.col(z).setZero();
        continue;
      }
      D_[z] = d;
      if (rows.size() == 1) {
        // w a a' - (w v a)(w v a)'/d  ==  w * wb / d * a a'   (no cancellation)
        const auto k = rows.front();
        const auto& a = s_.rows[k].core;
        K.noalias() += (wt[static_cast<Eigen::Index>(k)] * wb / d) * a * a.transpose();
      } else {
        for (auto k : rows) {
          const auto& a = s_.rows[k].core;
          K.noalias() += wt[static_cast<Eigen::Index>(k)] * a * a.transpose();
        }
        K.noalias() -= U_.col(z) * U_.col(z).transpose() / d;
      }
    }
    // Rows coupling several auxiliaries get an explicit multiplier y_c with
    // B_c' dx - y_c / w_c = 0, which stays well conditioned when w_c is huge.
    const Eigen::Index me = s_.A.rows();
    const auto r = static_cast<Eigen::Index>(s_.multi_rows.size());
    Ba_.setZero(na, r);
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nc, r);
    Eigen::MatrixXd Gm = Eigen::MatrixXd::Zero(r, r);
    for (Eigen::Index c = 0; c < r; ++c) {
      const auto k = s_.multi_rows[static_cast<std::size_t>(c)];
      C.col(c) = s_.rows[k].core;
      for (const auto& [j, a] : s_.rows[k].aux) Ba_(j - nc, c) += a;
      Gm(c, c) = 1.0 / wt[static_cast<Eigen::Index>(k)];
    }
    if (r) {
      const Eigen::MatrixXd DinvBa = D_.cwiseInverse().asDiagonal() * Ba_;
      C -= U_ * DinvBa;
      Gm += Ba_.transpose() * DinvBa;
    }
    const Eigen::Index sz = nc + r + me;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(sz, sz);
    kkt.topLeftCorner(nc, nc) = 0.5 * (K + K.transpose());
    if (r) {
      kkt.block(0, nc, nc, r) = C;
      kkt.block(nc, 0, r, nc) = C.transpose();
      kkt.block(nc, nc, r, r) = -0.5 * (Gm + Gm.transpose());
    }
    if (me) {
      kkt.block(0, nc + r, nc, me) = s_.A.transpose();
      kkt.block(nc + r, 0, me, nc) = s_.A;
    }
    // symmetric equilibration; the cone weights differ by many orders of
    // magnitude near the boundary
    kscale_.resize(sz);
    for (Eigen::Index i = 0; i < sz; ++i) {
      const double big = kkt.row(i).cwiseAbs().maxCoeff();
      kscale_[i] = big > 0.0 ? 1.0 / std::sqrt(big) : 1.0;
    }
    kkt = kscale_.asDiagonal() * kkt * kscale_.asDiagonal();
    // tiny static regularization keeps directions without curvature solvable
    for (Eigen::Index i = 0; i < nc; ++i) kkt(i, i) += 1e-13;
    lu_.compute(kkt);
  }

  /// Solves the Newton system in scaled form for (dx, dy, W dz); `rz` is
  /// the scaled third block W^-1 r.
  void solve(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, const Eigen::VectorXd& rz, Eigen::VectorXd& dx,
             Eigen::VectorXd& dy, Eigen::VectorXd& dzt) const {
    const Eigen::VectorXd bx = rx + scaled_Gt(rz);
    dx = reduced(bx, ry, dy);
    for (int round = 0; round < 3; ++round) {
      Eigen::VectorXd ax, ay;
      apply(dx, dy, ax, ay);
      const Eigen::VectorXd ex = bx - ax;
      const Eigen::VectorXd ey = ry - ay;
      const double err = std::max(ex.lpNorm<Eigen::Infinity>(), ey.size() ? ey.lpNorm<Eigen::Infinity>() : 0.0);
      const double ref = std::max(bx.lpNorm<Eigen::Infinity>(), ry.size() ? ry.lpNorm<Eigen::Infinity>() : 0.0);
      if (!(err > 1e-15 * ref)) break;
      Eigen::VectorXd cy;
      const Eigen::VectorXd cx = reduced(ex, ey, cy);
      dx += cx;
      if (dy.size()) dy += cy;
    }
    dzt = scaled_G(dx) - rz;
  }

 private:
  /// (G' W^-2 G) dx + A' dy and A dx.
  void apply(const Eigen::VectorXd& dx, const Eigen::VectorXd& dy, Eigen::VectorXd& ax, Eigen::VectorXd& ay) const {
    ax = scaled_Gt(scaled_G(dx));
    if (s_.A.rows()) {
      ax.head(s_.nc) += s_.A.transpose() * dy;
      ay = s_.A * dx.head(s_.nc);
    } else {
      ay.resize(0);
    }
  }

  Eigen::VectorXd reduced(const Eigen::VectorXd& rx, const Eigen::VectorXd& ry, Eigen::VectorXd& dy) const {
    const Eigen::Index nc = s_.nc;
    const Eigen::Index na = s_.n - nc;
    const Eigen::Index me = s_.A.rows();
    const Eigen::Index r = Ba_.cols();
    const Eigen::VectorXd rz_d = rx.tail(na).cwiseQuotient(D_);
    Eigen::VectorXd top(nc + r + me);
    top.head(nc) = rx.head(nc);
    if (na) top.head(nc) -= U_ * rz_d;
    if (r) top.segment(nc, r) = -Ba_.transpose() * rz_d;
    if (me) top.tail(me) = ry;
    const Eigen::VectorXd sol = kscale_.asDiagonal() * lu_.solve(kscale_.asDiagonal() * top).eval();
    Eigen::VectorXd dx(s_.n);
    dx.head(nc) = sol.head(nc);
    if (na) {
      Eigen::VectorXd rz = rx.tail(na) - U_.transpose() * sol.head(nc);
      if (r) rz -= Ba_ * sol.segment(nc, r);
      dx.tail(na) = rz.cwiseQuotient(D_);
    }
    dy = sol.tail(me);
    return dx;
  }

  const Scaled& s_;
  Layout l_;
  std::size_t R_ = 0, B_ = 0;
  Eigen::VectorXd winv_lp_;          // W^-1 on the orthant
  std::vector<Eigen::MatrixXd> Gs_;  // W^-1 G per SOC
  Eigen::MatrixXd S_;                // SOC contribution, core x core
  Eigen::VectorXd D_;
  Eigen::MatrixXd U_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  Eigen::VectorXd kscale_;
  Eigen::MatrixXd Ba_;  // aux coefficients of multi-auxiliary rows
};

struct Outcome {
  Eigen::VectorXd x;  // scaled-space primal point, divided by tau
  SolveStatus status = SolveStatus::max_iter;
  KktResiduals kkt;
  int iterations = 0;
};

inline Outcome run_ipm(const Scaled& s, const SolverOptions& opt) {
  Kkt kkt(s);
  const Layout& l = kkt.layout();
  const Eigen::Index n = s.n, me = s.A.rows();
  const Eigen::VectorXd h = kkt.h();
  const Eigen::VectorXd e = cone_unit(l);
  const Eigen::VectorXd bvec = me ? Eigen::VectorXd(s.b) : Eigen::VectorXd(0);
  auto A_x = [&](const Eigen::VectorXd& x) { return me ? Eigen::VectorXd(s.A * x.head(s.nc)) : Eigen::VectorXd(0); };
  auto At_y = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (me) out.head(s.nc) = s.A.transpose() * y;
    return out;
  };
  const double resx0 = std::max(1.0, s.c.norm());
  const double resy0 = std::max(1.0, me ? s.b.norm() : 0.0);
  const double resz0 = std::max(1.0, h.norm());

  // Starting point: least-norm slacks and multipliers, shifted into the cone.
  Scaling unit;
  unit.lp = Eigen::VectorXd::Ones(l.lp);
  for (std::size_t k = 0; k < l.off.size(); ++k) {
    unit.W.push_back(Eigen::MatrixXd::Identity(l.dim[k], l.dim[k]));
    unit.Winv.push_back(unit.W.back());
  }
  kkt.factor(unit);
  Eigen::VectorXd x, y, z, sv, tmp_y, tmp_z;
  kkt.solve(Eigen::VectorXd::Zero(n), bvec, h, x, y, z);
  sv = -z;
  {
    const double a = cone_violation(l, sv);
    if (a >= 0.0) sv += (1.0 + a) * e;
  }
  Eigen::VectorXd x0;
  kkt.solve(-s.c, Eigen::VectorXd::Zero(me), Eigen::VectorXd::Zero(l.total), x0, y, z);
  {
    const double a = cone_violation(l, z);
    if (a >= 0.0) z += (1.0 + a) * e;
  }
  double tau = 1.0, kappa = 1.0;

  Outcome out;
  int stalled = 0, polish = 0;
  Eigen::VectorXd best_x, acc_x;
  KktResiduals best_kkt, acc_kkt;
  double acc_score = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    out.iterations = it;
    const Eigen::VectorXd Gx = kkt.G(x);
    const Eigen::VectorXd Ax = A_x(x);
    const Eigen::VectorXd rx = At_y(y) + kkt.Gt(z) + s.c * tau;
    const Eigen::VectorXd ry = Ax - bvec * tau;
    const Eigen::VectorXd rz = sv + Gx - h * tau;
    const double cx = s.c.dot(x), by = me ? bvec.dot(y) : 0.0, hz = h.dot(z);
    const double rt = kappa + cx + by + hz;
    const double gap = sv.dot(z);
    const double mu = (gap + tau * kappa) / (l.degree + 1.0);

    const double pcost = cx / tau, dcost = -(by + hz) / tau;
    const double pres = std::max(me ? ry.norm() / tau / resy0 : 0.0, rz.norm() / tau / resz0);
    const double dres = rx.norm() / tau / resx0;
    double relgap = gap / (tau * tau) / std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    out.kkt = {pres, dres, relgap};
#ifdef VRESPORT_SOLVER_TRACE
    std::fprintf(stderr, "it %2d pcost %.9e dcost %.9e pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e\n", it, pcost,
                 dcost, pres, dres, relgap, tau, kappa);
#endif
    // Past the target keep tightening the gap for a few iterations: at a
    // smooth optimum the point error is only the square root of the gap.
    if (pres <= opt.target_tol && dres <= opt.target_tol && relgap <= opt.target_tol) {
      best_x = x / tau;
      best_kkt = out.kkt;
      if (relgap <= 1e-12 || ++polish > 10) break;
    } else if (best_x.size()) {
      break;
    }
    // Fallback point in case the iteration degrades before reaching the target.
    const double score = std::max({pres, dres, relgap});
    if (score <= opt.accept_tol && score < acc_score) {
      acc_score = score;
      acc_x = x / tau;
      acc_kkt = out.kkt;
    } else if (acc_x.size() && score > 1e3 * acc_score) {
      break;
    }
    // certificates
    if (by + hz < 0.0) {
      const double pinf = (At_y(y) + kkt.Gt(z)).norm() / resx0 / -(by + hz);
      if (pinf <= opt.target_tol) {
        out.status = SolveStatus::infeasible;
        break;
      }
    }
    if (cx < 0.0) {
      const double dinf = std::max(me ? Ax.norm() / resy0 : 0.0, (Gx + sv).norm() / resz0) / -cx;
      if (dinf <= opt.target_tol) {
        out.status = SolveStatus::unbounded;
        break;
      }
    }
    if (it >= opt.max_iter || stalled >= 3) {
      out.status = SolveStatus::max_iter;
      break;
    }

    const Scaling w = nt_scaling(l, sv, z);
    kkt.factor(w);
    const Eigen::VectorXd ht = w.apply(l, h, true);
    Eigen::VectorXd x1, y1, z1;
    kkt.solve(-s.c, bvec, ht, x1, y1, z1);
    const double den = -kappa / tau + s.c.dot(x1) + (me ? bvec.dot(y1) : 0.0) + ht.dot(z1);

    struct Step {
      Eigen::VectorXd dx, dy, dz, ds, dzt, dst;  // dzt = W dz, dst = W^-1 ds
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double eta, const Eigen::VectorXd& dc, double dt) {
      Step st;
      const Eigen::VectorXd u = cone_divide(l, w.lambda, dc);
      Eigen::VectorXd x2, y2, z2;
      kkt.solve(-eta * rx, -eta * ry, w.apply(l, -eta * rz, true) - u, x2, y2, z2);
      st.dtau = (-eta * rt - dt / tau - s.c.dot(x2) - (me ? bvec.dot(y2) : 0.0) - ht.dot(z2)) / den;
      st.dx = x2 + st.dtau * x1;
      st.dy = y2 + st.dtau * y1;
      st.dzt = z2 + st.dtau * z1;
      st.dst = u - st.dzt;
      st.dz = w.apply(l, st.dzt, true);
      st.ds = w.apply(l, st.dst, false);
      st.dkappa = (dt - kappa * st.dtau) / tau;
      return st;
    };
    auto step_length = [&](const Step& st) {
      double a = max_step(l, sv, st.ds, 1e300);
      a = std::min(a, max_step(l, z, st.dz, 1e300));
      if (st.dtau < 0.0) a = std::min(a, -tau / st.dtau);
      if (st.dkappa < 0.0) a = std::min(a, -kappa / st.dkappa);
      return a;
    };

    const Eigen::VectorXd lam2 = cone_product(l, w.lambda, w.lambda);
    const Step aff = direction(1.0, -lam2, -tau * kappa);
    const double a_aff = std::min(1.0, step_length(aff));
    const double sigma = std::pow(std::max(0.0, 1.0 - a_aff), 3);
    const Eigen::VectorXd corr = cone_product(l, aff.dst, aff.dzt);
    const Step st = direction(1.0 - sigma, -lam2 + sigma * mu * e - corr,
                              -tau * kappa + sigma * mu - aff.dtau * aff.dkappa);
    if (!(st.dx.allFinite() && std::isfinite(st.dtau))) {
      out.status = SolveStatus::max_iter;
      break;
    }
    const double a = std::min(1.0, 0.99 * step_length(st));
    stalled = a < 1e-10 ? stalled + 1 : 0;
    x += a * st.dx;
    if (me) y += a * st.dy;
    z += a * st.dz;
    sv += a * st.ds;
    tau += a * st.dtau;
    kappa += a * st.dkappa;
  }
  if (best_x.size()) {
    out.status = SolveStatus::optimal;
    out.kkt = best_kkt;
    out.x = std::move(best_x);
    return out;
  }
  if (out.status == SolveStatus::max_iter && acc_x.size()) {
    out.status = SolveStatus::optimal;
    out.kkt = acc_kkt;
    out.x = std::move(acc_x);
    return out;
  }
  out.x = x / tau;
  return out;
}

}  // namespace solver_detail

/// Solves a convex program. Deterministic for identical input.
inline Solution solve(const ConvexProgram& p, const SolverOptions& opt = {}) {
  using namespace solver_detail;
  check_program(p);
  const Scaled s = make_scaled(p);
  const Outcome r = run_ipm(s, opt);
  Solution sol;
  sol.x.resize(p.n_vars);
  sol.x.head(p.n_core) = r.x.head(p.n_core);
  sol.x.tail(p.n_vars - p.n_core) = r.x.tail(p.n_vars - p.n_core);
  sol.status = r.status;
  sol.kkt = r.kkt;
  sol.iterations = r.iterations;
  sol.objective = p.objective_value(sol.x);
  return sol;
}

/// Minimizes the program's quadratic form subject to its linear constraints;
/// the variance bound itself is ignored.
inline Solution min_variance(const ConvexProgram& p, const SolverOptions& opt = {}) {
  if (!p.quad_constraint) throw Error("min_variance: program has no quadratic form");
  ConvexProgram q = p;
  q.objective = Eigen::VectorXd::Zero(p.n_vars);
  q.quadratic_objective = p.quad_constraint->form;
  q.quad_constraint.reset();
  return solve(q, opt);
}

/// Solves with the variance bound removed. When the remaining program is a
/// single positive equality over nonnegative variables the optimum is a
/// vertex; it is computed directly so that ties resolve to the lowest index.
inline Solution unconstrained_sd_endpoint(const ConvexProgram& p, const SolverOptions& opt = {}) {
  ConvexProgram q = p;
  q.quad_constraint.reset();
  bool simplex = q.ineq_rows.empty() && q.eq_rows.size() == 1 && q.n_vars == q.n_core && !q.quadratic_objective &&
                 q.eq_rows.front().rhs > 0.0 && q.eq_rows.front().core.size() == q.n_vars;
  for (Eigen::Index j = 0; simplex && j < q.n_vars; ++j) {
    simplex = q.lower[j] == 0.0 && q.eq_rows.front().core[j] > 0.0;
  }
  if (!simplex) return solve(q, opt);
  const auto& row = q.eq_rows.front();
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < q.n_vars; ++j) {
    if (q.objective[j] / row.core[j] < q.objective[best] / row.core[best]) best = j;
  }
  Solution sol;
  sol.x = Eigen::VectorXd::Zero(q.n_vars);
  sol.x[best] = row.rhs / row.core[best];
  sol.objective = q.objective_value(sol.x);
  sol.status = SolveStatus::optimal;
  return sol;
}

/// Plain-text LP-style dump (CPLEX LP flavour) for cross-checking.
inline std::string to_lp_string(const ConvexProgram& p) {
  auto name = [&](Eigen::Index j) {
    return j < static_cast<Eigen::Index>(p.names.size()) ? p.names[static_cast<std::size_t>(j)]
                                                         : "x" + std::to_string(j);
  };
  std::ostringstream out;
  out.precision(17);
  auto term = [&](double a, Eigen::Index j, bool& first) {
    if (a == 0.0) return;
    out << (a < 0 ? " - " : (first ? " " : " + ")) << std::abs(a) << ' ' << name(j);
    first = false;
  };
  auto row_terms = [&](const LinearRow& r) {
    bool first = true;
    for (Eigen::Index j = 0; j < r.core.size(); ++j) term(r.core[j], j, first);
    for (const auto& [j, a] : r.aux) term(a, j, first);
    if (first) out << " 0";
  };
  auto quad_terms = [&](const QuadraticForm& f, double factor) {
    out << " [";
    bool first = true;
    for (Eigen::Index i = 0; i < f.Q.rows(); ++i) {
      for (Eigen::Index j = i; j < f.Q.cols(); ++j) {
        const double a = factor * (i == j ? f.Q(i, j) : 2.0 * f.Q(i, j));
        if (a == 0.0) continue;
        out << (a < 0 ? " - " : (first ? " " : " + ")) << std::abs(a) << ' ' << name(i);
        if (i == j) out << " ^2";
        else out << " * " << name(j);
        first = false;
      }
    }
    out << " ]";
  };
  out << "\\ n_vars=" << p.n_vars << " n_core=" << p.n_core << "\nMinimize\n obj:";
  bool first = true;
  for (Eigen::Index j = 0; j < p.n_vars; ++j) term(p.objective[j], j, first);
  if (p.quadratic_objective) {
    const auto& f = *p.quadratic_objective;
    for (Eigen::Index j = 0; j < f.g.size(); ++j) term(2.0 * f.g[j], j, first);
    quad_terms(f, 2.0);
    out << " / 2";
  }
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < p.eq_rows.size(); ++i) {
    out << " e" << i << ':';
    row_terms(p.eq_rows[i]);
    out << " = " << p.eq_rows[i].rhs << '\n';
  }
  for (std::size_t i = 0; i < p.ineq_rows.size(); ++i) {
    out << " r" << i << ':';
    row_terms(p.ineq_rows[i]);
    out << " <= " << p.ineq_rows[i].rhs << '\n';
  }
  if (p.quad_constraint) {
    const auto& qc = *p.quad_constraint;
    out << " variance:";
    bool f2 = true;
    for (Eigen::Index j = 0; j < qc.form.g.size(); ++j) term(2.0 * qc.form.g[j], j, f2);
    quad_terms(qc.form, 1.0);
    out << " <= " << qc.bound - qc.form.h << '\n';
  }
  out << "Bounds\n";
  for (Eigen::Index j = 0; j < p.n_vars; ++j) {
    if (std::isfinite(p.lower[j])) out << ' ' << name(j) << " >= " << p.lower[j] << '\n';
    else out << ' ' << name(j) << " free\n";
  }
  out << "End\n";
  return out.str();
}

}  // namespace vresport

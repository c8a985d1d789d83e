#include "ckmtrack/beamform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ckmtrack::beamform {

double fisher_info(double theta, double gain_abs, const CMatX& f,
                   long frame_length, double sigma_z2, int nr) {
  if (!(sigma_z2 > 0.0)) {
    throw std::invalid_argument("fisher_info: sigma_z2 must be positive");
  }
  const CVecX a = signal::steering_vector(theta, static_cast<int>(f.rows()));
  const CVecX db = signal::steering_derivative(theta, nr);
  // (F^T kron db) a* = vec(db * (a^H F)).
  const CMatX j_mat = db * (a.adjoint() * f);
  const double l = static_cast<double>(frame_length);
  return l * l * gain_abs * gain_abs * j_mat.squaredNorm() / sigma_z2;
}

double crb(double theta, double gain_abs, const CMatX& f, long frame_length,
           double sigma_z2, int nr) {
  const double j = fisher_info(theta, gain_abs, f, frame_length, sigma_z2, nr);
  if (!(j > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  return 1.0 / j;
}

CMatX select_beams(const std::vector<PredictedPath>& predicted, int ns,
                   int nt) {
  if (predicted.empty()) {
    throw std::invalid_argument("select_beams: needs at least one path");
  }
  std::vector<int> order(predicted.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (predicted[a].gain_abs != predicted[b].gain_abs) {
      return predicted[a].gain_abs > predicted[b].gain_abs;
    }
    return predicted[a].path_id < predicted[b].path_id;
  });

  const int p = static_cast<int>(predicted.size());
  const int selected = std::min(ns, p);
  std::vector<int> chosen(order.begin(), order.begin() + selected);
  std::sort(chosen.begin(), chosen.end(), [&](int a, int b) {
    return predicted[a].path_id < predicted[b].path_id;
  });

  CMatX a_mat(nt, ns);
  for (int col = 0; col < ns; ++col) {
    const int src = col < selected ? chosen[col] : order.front();
    a_mat.col(col) = signal::steering_vector(predicted[src].theta, nt);
  }
  return a_mat;
}

MatX allocation_coeffs(const CMatX& steering, const std::vector<double>& angles,
                       int nr) {
  const int ns = static_cast<int>(steering.cols());
  const int p = static_cast<int>(angles.size());
  MatX coeffs(p, ns);
  for (int i = 0; i < p; ++i) {
    const CVecX a = signal::steering_vector(angles[i],
                                            static_cast<int>(steering.rows()));
    const CVecX b = signal::steering_vector(angles[i], nr);
    const CMatX c = b * (a.adjoint() * steering);  // nr x ns
    for (int col = 0; col < ns; ++col) {
      double acc = 0.0;
      for (int g = 0; g < nr; ++g) {
        acc += std::norm(c(g, col)) * static_cast<double>(g) *
               static_cast<double>(g);
      }
      coeffs(i, col) = acc;
    }
  }
  return coeffs;
}

AllocationResult allocate_power(const AllocationProblem& problem) {
  const int p = static_cast<int>(problem.coeffs.rows());
  const int ns = static_cast<int>(problem.coeffs.cols());
  if (problem.amplitudes.size() != p) {
    throw std::invalid_argument("allocate_power: amplitude/coeff mismatch");
  }
  if (!(problem.budget > 0.0)) {
    throw std::invalid_argument("allocate_power: budget must be positive");
  }

  // Effective per-path rows d_i = a_i^2 * c_i.
  MatX d(p, ns);
  for (int i = 0; i < p; ++i) {
    d.row(i) = problem.amplitudes[i] * problem.amplitudes[i] *
               problem.coeffs.row(i);
  }

  AllocationResult out;
  for (int i = 0; i < p; ++i) {
    if (!(d.row(i).maxCoeff() > 0.0)) {
      out.gamma = VecX::Constant(ns, problem.budget / ns);
      out.t_star = 0.0;
      out.degenerate = true;
      return out;
    }
  }

  // Variables x = [gamma_1..gamma_ns, t]. Constraints rows * x <= rhs:
  //   t - d_i gamma <= 0        (p rows)
  //   sum gamma     <= budget   (1 row)
  //   -gamma_ns     <= 0        (ns rows)
  const int nv = ns + 1;
  const int nc = p + 1 + ns;
  MatX rows = MatX::Zero(nc, nv);
  VecX rhs = VecX::Zero(nc);
  for (int i = 0; i < p; ++i) {
    rows.block(i, 0, 1, ns) = -d.row(i);
    rows(i, ns) = 1.0;
  }
  rows.block(p, 0, 1, ns).setOnes();
  rhs[p] = problem.budget;
  for (int j = 0; j < ns; ++j) {
    rows(p + 1 + j, j) = -1.0;
  }

  const double scale =
      std::max({1.0, problem.budget, d.cwiseAbs().maxCoeff()});
  const double feas_tol = 1e-9 * scale;

  double best_t = -std::numeric_limits<double>::infinity();
  VecX best_x;

  // Enumerate active sets of size nv in lexicographic order.
  std::vector<int> idx(nv);
  std::iota(idx.begin(), idx.end(), 0);
  bool more = true;
  while (more) {
    MatX a_sub(nv, nv);
    VecX b_sub(nv);
    for (int r = 0; r < nv; ++r) {
      a_sub.row(r) = rows.row(idx[r]);
      b_sub[r] = rhs[idx[r]];
    }
    Eigen::FullPivLU<MatX> lu(a_sub);
    if (lu.isInvertible()) {
      const VecX x = lu.solve(b_sub);
      bool feasible = x.allFinite();
      for (int r = 0; feasible && r < nc; ++r) {
        if (rows.row(r).dot(x) > rhs[r] + feas_tol) feasible = false;
      }
      if (feasible && x[ns] > best_t) {
        best_t = x[ns];
        best_x = x;
      }
    }
    // Next combination.
    int pos = nv - 1;
    while (pos >= 0 && idx[pos] == nc - nv + pos) --pos;
    if (pos < 0) {
      more = false;
    } else {
      ++idx[pos];
      for (int r = pos + 1; r < nv; ++r) idx[r] = idx[r - 1] + 1;
    }
  }

  if (!best_x.size()) {
    // Should not happen for well-formed inputs; fall back to equal split.
    out.gamma = VecX::Constant(ns, problem.budget / ns);
    VecX j = d * out.gamma;
    out.t_star = j.minCoeff();
    out.degenerate = true;
    return out;
  }
  out.gamma = best_x.head(ns).cwiseMax(0.0);
  out.t_star = best_t;
  return out;
}

BeamformingPlan build_plan(const std::vector<PredictedPath>& predicted, int ns,
                           int nt, int nr, double budget, BfMode mode) {
  if (predicted.empty()) {
    throw std::invalid_argument("build_plan: needs at least one path");
  }
  BeamformingPlan plan;
  plan.mode = mode;

  if (mode == BfMode::kNone) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(predicted.size()); ++i) {
      if (predicted[i].gain_abs > predicted[best].gain_abs) best = i;
    }
    const CVecX a = signal::steering_vector(predicted[best].theta, nt);
    plan.steering.resize(nt, ns);
    for (int col = 0; col < ns; ++col) plan.steering.col(col) = a;
    plan.gamma = VecX::Constant(ns, budget / ns);
    plan.angles.assign(ns, predicted[best].theta);
    return plan;
  }

  plan.steering = select_beams(predicted, ns, nt);
  // Recover per-column angles the same way select_beams chose them.
  {
    std::vector<int> order(predicted.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (predicted[a].gain_abs != predicted[b].gain_abs) {
        return predicted[a].gain_abs > predicted[b].gain_abs;
      }
      return predicted[a].path_id < predicted[b].path_id;
    });
    const int selected = std::min<int>(ns, predicted.size());
    std::vector<int> chosen(order.begin(), order.begin() + selected);
    std::sort(chosen.begin(), chosen.end(), [&](int a, int b) {
      return predicted[a].path_id < predicted[b].path_id;
    });
    plan.angles.clear();
    for (int col = 0; col < ns; ++col) {
      const int src = col < selected ? chosen[col] : order.front();
      plan.angles.push_back(predicted[src].theta);
    }
  }

  if (mode == BfMode::kEqual) {
    plan.gamma = VecX::Constant(ns, budget / ns);
    return plan;
  }

  AllocationProblem prob;
  std::vector<double> angles;
  angles.reserve(predicted.size());
  prob.amplitudes.resize(static_cast<long>(predicted.size()));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    angles.push_back(predicted[i].theta);
    prob.amplitudes[static_cast<long>(i)] =
        predicted[i].gain_abs * std::sin(predicted[i].theta);
  }
  prob.coeffs = allocation_coeffs(plan.steering, angles, nr);
  prob.budget = budget;
  plan.gamma = allocate_power(prob).gamma;
  return plan;
}

}  // namespace ckmtrack::beamform

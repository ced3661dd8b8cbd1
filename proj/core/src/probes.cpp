// Copyright 2026 The ZDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "zdp/probes.hpp"

#include <algorithm>
#include <cmath>

#include "zdp/error.hpp"

namespace zdp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_probe_inputs(const ActivationMatrix& h_hat, const NullBasis& v0) {
  detail::require(v0.side() == Side::right, "probe needs a right-side null basis");
  detail::require(v0.ambient_dim() == h_hat.dim(),
                  "null basis dimension does not match activation width");
  if (v0.k() == 0) detail::fail_argument("no null directions to probe");
}

}  // namespace

NvlResult nvl(const ActivationMatrix& h_hat, const NullBasis& v0) {
  check_probe_inputs(h_hat, v0);
  NvlResult out;
  out.nvl = (h_hat.data() * v0.basis()).squaredNorm();
  out.d_score = out.nvl / (static_cast<double>(h_hat.n_tokens()) * static_cast<double>(v0.k()));
  return out;
}

double snl(const ActivationMatrix& h_hat, const NullBasis& v0) {
  check_probe_inputs(h_hat, v0);
  const double total = h_hat.data().squaredNorm();
  if (!(total > 0.0)) detail::fail_argument("undefined ratio: perturbed activations are zero");
  const double leak = (h_hat.data() * v0.basis()).squaredNorm();
  return std::min(leak / total, 1.0);
}

double fnc(const MatrixXd& fisher, const NullBasis& v0) {
  detail::require(fisher.rows() == fisher.cols(), "fnc: Fisher matrix must be square");
  detail::require(fisher.rows() == v0.ambient_dim(), "fnc: dimension mismatch");
  detail::require(fisher.allFinite(), "fnc: Fisher matrix contains NaN or Inf");
  const double scale = std::max(fisher.cwiseAbs().maxCoeff(), 1e-300);
  detail::require((fisher - fisher.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale,
                  "fnc: Fisher matrix is not symmetric");
  if (fisher.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetrized(fisher), Eigen::EigenvaluesOnly);
    detail::require(eig.eigenvalues().minCoeff() >= -1e-8 * scale,
                    "fnc: Fisher matrix is indefinite");
  }
  return (fisher * v0.basis()).squaredNorm();
}

ProbeReport probe_report(const ActivationMatrix& h_hat, const NullBasis& v0,
                         const std::optional<MatrixXd>& fisher) {
  const NvlResult leak = nvl(h_hat, v0);
  ProbeReport r;
  r.layer_id = h_hat.layer_id();
  r.nvl = leak.nvl;
  r.d_score = leak.d_score;
  r.snl = snl(h_hat, v0);
  if (fisher) r.fnc = fnc(*fisher, v0);
  r.k = v0.k();
  r.n = h_hat.n_tokens();
  return r;
}

void BinaConfig::validate() const {
  detail::require(step_size > 0.0 && std::isfinite(step_size), "BINA step size must be > 0");
  detail::require(budget > 0.0 && std::isfinite(budget), "BINA budget must be > 0");
  detail::require(iterations >= 1, "BINA needs at least one iteration");
}

VectorXd numerical_gradient(const std::function<double(const VectorXd&)>& f,
                            const VectorXd& x) {
  const double h = 1e-5 * (1.0 + (x.size() ? x.cwiseAbs().maxCoeff() : 0.0));
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

MatrixXd numerical_jacobian(const std::function<VectorXd(const VectorXd&)>& f,
                            const VectorXd& x) {
  const double h = 1e-5 * (1.0 + (x.size() ? x.cwiseAbs().maxCoeff() : 0.0));
  VectorXd probe = x;
  MatrixXd jac;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const VectorXd up = f(probe);
    probe(i) = x(i) - h;
    const VectorXd down = f(probe);
    probe(i) = x(i);
    if (i == 0) jac.resize(up.size(), x.size());
    jac.col(i) = (up - down) / (2.0 * h);
  }
  return jac;
}

BinaResult bina(const VectorXd& h, const Projector& p, const Projector& q,
                const DifferentiableMap& map, const BinaConfig& cfg,
                const ScalarFunctional* functional) {
  cfg.validate();
  const Eigen::Index d = h.size();
  detail::require(p.dim() == d && q.dim() == d, "bina: projector dimensions must match h");
  detail::require(static_cast<bool>(map.forward), "bina: map needs a forward function");
  if (cfg.objective == BinaObjective::score_functional) {
    detail::require(functional != nullptr && static_cast<bool>(functional->value),
                    "bina: score_functional objective needs a functional");
  }

  const VectorXd base_out = map.forward(h);
  detail::require(base_out.size() == d,
                  "bina: map output must live in R^d so the left-null projector applies");
  const MatrixXd& pm = p.matrix();
  const MatrixXd& qm = q.matrix();

  auto objective_gradient = [&](const VectorXd& x) -> VectorXd {
    if (cfg.objective == BinaObjective::score_functional) {
      if (functional->gradient) return functional->gradient(x);
      return numerical_gradient(functional->value, x);
    }
    // grad of ||f(x) - f(h)||^2
    const VectorXd diff = map.forward(x) - base_out;
    const MatrixXd jac = map.jacobian ? map.jacobian(x) : numerical_jacobian(map.forward, x);
    return 2.0 * jac.transpose() * diff;
  };
  auto score_of = [&](const VectorXd& delta) {
    return (qm * (map.forward(h + delta) - base_out)).norm();
  };

  BinaResult out;
  out.delta = VectorXd::Zero(d);
  for (int it = 1; it <= cfg.iterations; ++it) {
    const VectorXd g = objective_gradient(h + out.delta);
    if (!g.allFinite()) throw NumericalError("bina: non-finite gradient");
    const VectorXd s = pm * (qm * g);
    const double s_norm = s.norm();
    if (s_norm < 1e-12) {
      out.dead_gradient = true;
      break;
    }
    out.delta += cfg.step_size * (s / std::max(s_norm, 1e-12));
    const double norm = out.delta.norm();
    if (norm > cfg.budget) out.delta *= cfg.budget / norm;
    out.delta = pm * out.delta;
    if (!out.delta.allFinite()) throw NumericalError("bina: non-finite perturbation");
    out.iterations_run = it;
    if (cfg.record_trajectory) {
      BinaStep step;
      step.iteration = it;
      step.score = score_of(out.delta);
      step.delta_norm = out.delta.norm();
      step.off_null_norm = (out.delta - pm * out.delta).norm();
      out.trajectory.push_back(step);
    }
  }
  out.score = score_of(out.delta);
  return out;
}

}  // namespace zdp

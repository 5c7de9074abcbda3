// avwake/gradcheck.cpp

// Copyright 2026  The avwake authors

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

#include "avwake/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "avwake/errors.hpp"

namespace avwake {

GradCheckReport FiniteDiffCheck(const std::function<Tensor()>& objective,
                                std::span<Tensor> params, double eps) {
  if (!(eps > 0.0) || eps > 1e-2) {
    throw ContractError("FiniteDiffCheck: eps must lie in (0, 1e-2]");
  }

  auto eval = [&]() { return objective().item(); };

  const double probe1 = eval();
  const double probe2 = eval();
  if (probe1 != probe2) {
    throw OracleError("FiniteDiffCheck: objective is not deterministic");
  }

  for (Tensor& p : params) p.ZeroGrad();
  std::vector<std::vector<double>> analytic(params.size());
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = objective();
    tape.Backward(loss);
  }
  for (size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor& p = params[pi];
    analytic[pi].assign(static_cast<size_t>(p.numel()), 0.0);
    if (p.grad_data() != nullptr) {
      std::copy(p.grad_data(), p.grad_data() + p.numel(), analytic[pi].begin());
    }
  }

  GradCheckReport report;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    double* v = p.data();
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double saved = v[i];
      v[i] = saved + eps;
      const double up = eval();
      v[i] = saved - eps;
      const double down = eval();
      v[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][static_cast<size_t>(i)];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-12});
      const double rel = std::fabs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p.name().empty() ? ("param#" + std::to_string(pi)) : p.name();
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace avwake

// avwake/gradcheck.hpp

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

#ifndef AVWAKE_GRADCHECK_HPP_
#define AVWAKE_GRADCHECK_HPP_

#include <functional>
#include <span>
#include <string>

#include "avwake/tensor.hpp"

namespace avwake {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares reverse-mode gradients of a scalar objective against central
// finite differences over every element of `params`.
//
// `objective` must rebuild its graph from the current parameter values on
// each call and be deterministic (verified by a repeated evaluation; a
// mismatch throws OracleError).  eps must lie in (0, 1e-2].  Relative error
// is |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
GradCheckReport FiniteDiffCheck(const std::function<Tensor()>& objective,
                                std::span<Tensor> params, double eps);

}  // namespace avwake

#endif  // AVWAKE_GRADCHECK_HPP_

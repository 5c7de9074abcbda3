// avwake/fft.hpp

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

#ifndef AVWAKE_FFT_HPP_
#define AVWAKE_FFT_HPP_

#include <complex>
#include <vector>

namespace avwake {

// In-place iterative radix-2 FFT; size must be a power of two.
void Fft(std::vector<std::complex<double>>& a, bool inverse = false);

int64_t NextPow2(int64_t n);

}  // namespace avwake

#endif  // AVWAKE_FFT_HPP_

// src/kernels_impl.h

// Copyright 2024  The sidkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SIDKIT_SRC_KERNELS_IMPL_H_
#define SIDKIT_SRC_KERNELS_IMPL_H_

#include <cstddef>

namespace sidkit::kernels::detail {

double scalar_dot_f32(const float *a, const float *b, std::size_t n);
double scalar_sumsq_f32(const float *x, std::size_t n);
double scalar_dot_f64(const double *a, const double *b, std::size_t n);
double scalar_sumsq_f64(const double *x, std::size_t n);

#if defined(__x86_64__) || defined(_M_X64)
#define SIDKIT_HAVE_AVX2_KERNELS 1
double avx2_dot_f32(const float *a, const float *b, std::size_t n);
double avx2_sumsq_f32(const float *x, std::size_t n);
double avx2_dot_f64(const double *a, const double *b, std::size_t n);
double avx2_sumsq_f64(const double *x, std::size_t n);
#endif

}  // namespace sidkit::kernels::detail

#endif  // SIDKIT_SRC_KERNELS_IMPL_H_

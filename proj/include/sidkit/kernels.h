// include/sidkit/kernels.h

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

#ifndef SIDKIT_KERNELS_H_
#define SIDKIT_KERNELS_H_

#include <cstddef>

// Data-parallel inner loops behind trial scoring, affinity matrices and the
// margin-loss cosine sweep.  A scalar reference implementation always
// exists; an AVX2 variant is selected at runtime when the CPU supports it.
// All reductions accumulate in double, so the variants agree to roundoff
// (the equivalence tests pin the tolerance).  Within one process the active
// variant is fixed, so repeated identical calls are bitwise reproducible.

namespace sidkit::kernels {

enum class Backend { kScalar, kAvx2 };

// Variant currently in use.
Backend active_backend();
const char *backend_name(Backend b);

// Forces a variant (used by the equivalence tests).  Returns false and
// leaves the selection unchanged if the CPU lacks the requested one.
bool set_backend(Backend b);

bool cpu_supports(Backend b);

double dot_f32(const float *a, const float *b, std::size_t n);
double sumsq_f32(const float *x, std::size_t n);
double dot_f64(const double *a, const double *b, std::size_t n);
double sumsq_f64(const double *x, std::size_t n);

}  // namespace sidkit::kernels

#endif  // SIDKIT_KERNELS_H_

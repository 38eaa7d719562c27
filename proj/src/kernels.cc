// src/kernels.cc

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

#include "sidkit/kernels.h"

#include "kernels_impl.h"

namespace sidkit::kernels {

namespace {

using detail::scalar_dot_f32;
using detail::scalar_dot_f64;
using detail::scalar_sumsq_f32;
using detail::scalar_sumsq_f64;

struct KernelTable {
  double (*dot_f32)(const float *, const float *, std::size_t);
  double (*sumsq_f32)(const float *, std::size_t);
  double (*dot_f64)(const double *, const double *, std::size_t);
  double (*sumsq_f64)(const double *, std::size_t);
};

constexpr KernelTable kScalarTable = {scalar_dot_f32, scalar_sumsq_f32,
                                      scalar_dot_f64, scalar_sumsq_f64};

#ifdef SIDKIT_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2Table = {detail::avx2_dot_f32,
                                    detail::avx2_sumsq_f32,
                                    detail::avx2_dot_f64,
                                    detail::avx2_sumsq_f64};
#endif

bool detect_avx2() {
#ifdef SIDKIT_HAVE_AVX2_KERNELS
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct Dispatch {
  Backend backend;
  const KernelTable *table;

  Dispatch() {
    if (detect_avx2()) {
#ifdef SIDKIT_HAVE_AVX2_KERNELS
      backend = Backend::kAvx2;
      table = &kAvx2Table;
      return;
#endif
    }
    backend = Backend::kScalar;
    table = &kScalarTable;
  }
};

Dispatch &dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

const char *backend_name(Backend b) {
  switch (b) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool cpu_supports(Backend b) {
  if (b == Backend::kScalar) return true;
  return detect_avx2();
}

bool set_backend(Backend b) {
  if (!cpu_supports(b)) return false;
  Dispatch &d = dispatch();
  d.backend = b;
  switch (b) {
    case Backend::kScalar:
      d.table = &kScalarTable;
      break;
    case Backend::kAvx2:
#ifdef SIDKIT_HAVE_AVX2_KERNELS
      d.table = &kAvx2Table;
#endif
      break;
  }
  return true;
}

double dot_f32(const float *a, const float *b, std::size_t n) {
  return dispatch().table->dot_f32(a, b, n);
}

double sumsq_f32(const float *x, std::size_t n) {
  return dispatch().table->sumsq_f32(x, n);
}

double dot_f64(const double *a, const double *b, std::size_t n) {
  return dispatch().table->dot_f64(a, b, n);
}

double sumsq_f64(const double *x, std::size_t n) {
  return dispatch().table->sumsq_f64(x, n);
}

}  // namespace sidkit::kernels

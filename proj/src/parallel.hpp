#pragma once

#include "vstitch/kernels.hpp"

namespace vstitch::detail {

// Rows are independent; callers keep per-row partials so reductions are
// bit-identical between serial and parallel runs.
template <class RowFn>
void for_rows(int rows, kernels::Exec exec, RowFn&& fn) {
  if (exec == kernels::Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) fn(r);
  } else {
    for (int r = 0; r < rows; ++r) fn(r);
  }
}

}  // namespace vstitch::detail

// Copyright 2026 The dgnn Authors
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

#ifndef DGNN_PARALLEL_HPP_
#define DGNN_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace dgnn {

/// Worker cap for parallel_for. Starts from $DGNN_THREADS (default 1).
int thread_count();
void set_thread_count(int n);

/// Calls fn(k) for k in [0, n). Work is spread over thread_count() threads;
/// callers write results into slot k so the outcome does not depend on the
/// thread count. The first exception thrown by any call is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dgnn

#endif  // DGNN_PARALLEL_HPP_

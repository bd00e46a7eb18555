/*
 * Copyright 2026 The pcplod Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <functional>

namespace pcplod {

/// Runs task(i) for every i in [0, count) on up to `jobs` threads. Tasks must
/// write only to their own slots; the first exception thrown is rethrown
/// after all workers join.
void parallel_for(int count, int jobs, const std::function<void(int)>& task);

/// Job count from PCPLOD_JOBS, or 1.
int default_jobs();

}  // namespace pcplod

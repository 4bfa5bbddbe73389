/*
 * Copyright (c) 2026, the nomad-projection authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "nomad/affinity.hpp"
#include "nomad/dataset.hpp"
#include "nomad/error.hpp"
#include "nomad/kmeans.hpp"
#include "nomad/knn.hpp"
#include "nomad/metrics.hpp"
#include "nomad/objective.hpp"
#include "nomad/optimizer.hpp"
#include "nomad/pca.hpp"
#include "nomad/rng.hpp"
#include "nomad/svg.hpp"

// Copyright 2026 The tinyclf Authors.
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

#pragma once

/// @file tinyclf.hpp
/// @brief Umbrella header: evolve tiny combinational classifiers from tabular data.

#include "tinyclf/circuit.hpp"
#include "tinyclf/common.hpp"
#include "tinyclf/dataset.hpp"
#include "tinyclf/emit.hpp"
#include "tinyclf/encoding.hpp"
#include "tinyclf/evolve.hpp"
#include "tinyclf/fitness.hpp"
#include "tinyclf/pipeline.hpp"

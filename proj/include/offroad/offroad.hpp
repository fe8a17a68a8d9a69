// Copyright 2026 The Offroad Eval Authors
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


#ifndef OFFROAD__OFFROAD_HPP_
#define OFFROAD__OFFROAD_HPP_

#include "offroad/archive.hpp"
#include "offroad/core_geometry.hpp"
#include "offroad/elevation.hpp"
#include "offroad/errors.hpp"
#include "offroad/evaluation.hpp"
#include "offroad/mining_batch.hpp"
#include "offroad/orpo.hpp"
#include "offroad/params_io.hpp"
#include "offroad/planar.hpp"
#include "offroad/preference_mining.hpp"
#include "offroad/scene_retrieval.hpp"
#include "offroad/synthetic.hpp"
#include "offroad/tokenizer.hpp"
#include "offroad/traversability.hpp"

#endif  // OFFROAD__OFFROAD_HPP_

// protrack/protrack.hpp

// Copyright 2026 The protrack Authors
//
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

#pragma once

#include "protrack/consistency.hpp"
#include "protrack/corpus.hpp"
#include "protrack/decoder.hpp"
#include "protrack/errors.hpp"
#include "protrack/evaluator.hpp"
#include "protrack/location.hpp"
#include "protrack/pipeline.hpp"
#include "protrack/qaformat.hpp"
#include "protrack/synth.hpp"
#include "protrack/transitions.hpp"
#include "protrack/tuner.hpp"
#include "protrack/vocabulary.hpp"

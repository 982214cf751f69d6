// include/ddsd/ddsd.hpp

// Copyright 2026  The ddsd Authors

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

#ifndef DDSD_DDSD_HPP_
#define DDSD_DDSD_HPP_

#include "ddsd/backend.hpp"
#include "ddsd/classifier.hpp"
#include "ddsd/corpus.hpp"
#include "ddsd/det_export.hpp"
#include "ddsd/error.hpp"
#include "ddsd/eval.hpp"
#include "ddsd/lattice.hpp"
#include "ddsd/pipeline.hpp"
#include "ddsd/promptgen.hpp"
#include "ddsd/remote_backend.hpp"
#include "ddsd/stats.hpp"
#include "ddsd/synth.hpp"

#endif  // DDSD_DDSD_HPP_

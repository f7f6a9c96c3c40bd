// Copyright 2026 The T2G2 Authors.
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

#include "t2g2/action.hpp"
#include "t2g2/dialogue.hpp"
#include "t2g2/encoders.hpp"
#include "t2g2/error.hpp"
#include "t2g2/evaluation.hpp"
#include "t2g2/example.hpp"
#include "t2g2/rewriter.hpp"
#include "t2g2/schema.hpp"
#include "t2g2/service.hpp"
#include "t2g2/splits.hpp"
#include "t2g2/template_engine.hpp"

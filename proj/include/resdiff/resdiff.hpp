// Copyright 2026 The resdiff Authors
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

// Everything in one include.

#pragma once

#include "resdiff/error.hpp"
#include "resdiff/geometry.hpp"
#include "resdiff/spline.hpp"
#include "resdiff/nn/tensor.hpp"
#include "resdiff/nn/layers.hpp"
#include "resdiff/nn/unet.hpp"
#include "resdiff/nn/adam.hpp"
#include "resdiff/nn/checkpoint.hpp"
#include "resdiff/nn/grad_check.hpp"
#include "resdiff/diffusion/schedule.hpp"
#include "resdiff/diffusion/residual.hpp"
#include "resdiff/diffusion/trajectory_loss.hpp"
#include "resdiff/diffusion/model.hpp"
#include "resdiff/diffusion/trainer.hpp"
#include "resdiff/diffusion/sampler.hpp"
#include "resdiff/diffusion/features.hpp"
#include "resdiff/metrics.hpp"
#include "resdiff/ranking.hpp"
#include "resdiff/scale.hpp"
#include "resdiff/data/synthetic.hpp"
#include "resdiff/data/trajectory_csv.hpp"

#pragma once

// Umbrella header.

#include "cfgtok/answer_templates.hpp"
#include "cfgtok/condensed_grid.hpp"
#include "cfgtok/dpo_batch_io.hpp"
#include "cfgtok/error.hpp"
#include "cfgtok/fourier_weights.hpp"
#include "cfgtok/geometry.hpp"
#include "cfgtok/gradient_check.hpp"
#include "cfgtok/manifest.hpp"
#include "cfgtok/pipeline.hpp"
#include "cfgtok/position_encoding.hpp"
#include "cfgtok/scene_dpo.hpp"
#include "cfgtok/synth.hpp"
#include "cfgtok/tensor_io.hpp"
#include "cfgtok/token_file.hpp"
#include "cfgtok/voxel_grid.hpp"

#pragma once

#include "vampce/baselines.hpp"
#include "vampce/bg_denoiser.hpp"
#include "vampce/channel.hpp"
#include "vampce/csv.hpp"
#include "vampce/experiment_config.hpp"
#include "vampce/harness.hpp"
#include "vampce/linalg.hpp"
#include "vampce/metrics.hpp"
#include "vampce/ofdm.hpp"
#include "vampce/rng.hpp"
#include "vampce/types.hpp"
#include "vampce/vamp_em.hpp"

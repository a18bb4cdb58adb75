#pragma once

// Umbrella header for the deep embedded refined clustering library.

#include "derc/autoencoder.hpp"
#include "derc/clustering.hpp"
#include "derc/config.hpp"
#include "derc/data_io.hpp"
#include "derc/dataset.hpp"
#include "derc/error.hpp"
#include "derc/kmeans.hpp"
#include "derc/metrics.hpp"
#include "derc/model_io.hpp"
#include "derc/neural.hpp"
#include "derc/pipeline.hpp"
#include "derc/prescreen.hpp"
#include "derc/stats.hpp"
#include "derc/trainer.hpp"

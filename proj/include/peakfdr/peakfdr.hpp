#pragma once

#include "peakfdr/error.hpp"
#include "peakfdr/numerics.hpp"
#include "peakfdr/signal_model.hpp"
#include "peakfdr/filtering.hpp"
#include "peakfdr/palm.hpp"
#include "peakfdr/ksample.hpp"
#include "peakfdr/multitest.hpp"
#include "peakfdr/pipeline.hpp"
#include "peakfdr/experiment.hpp"
#include "peakfdr/io.hpp"

#pragma once

#include "adc/error.hpp"
#include "adc/metrics/metrics.hpp"
#include "adc/model/actor.hpp"
#include "adc/model/encdec_critic.hpp"
#include "adc/model/value_critic.hpp"
#include "adc/nn/adam.hpp"
#include "adc/nn/checkpoint.hpp"
#include "adc/nn/grad_check.hpp"
#include "adc/nn/gru.hpp"
#include "adc/nn/ln_lstm.hpp"
#include "adc/nn/ops.hpp"
#include "adc/synth/synth.hpp"
#include "adc/text/dataset.hpp"
#include "adc/text/vocabulary.hpp"
#include "adc/train/config.hpp"
#include "adc/train/trainer.hpp"
#include "adc/train/gradcheck_suite.hpp"

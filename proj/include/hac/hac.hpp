#pragma once

// single-header surface of the library

#include "hac/audio/spectrogram.hpp"
#include "hac/audio/wav.hpp"
#include "hac/cli/eval_driver.hpp"
#include "hac/cli/plots.hpp"
#include "hac/cli/run_config.hpp"
#include "hac/codec/checkpoint.hpp"
#include "hac/codec/config.hpp"
#include "hac/codec/model.hpp"
#include "hac/codec/quantizer.hpp"
#include "hac/data/alignment.hpp"
#include "hac/data/teacher_file.hpp"
#include "hac/data/tokens.hpp"
#include "hac/distill/kd_loss.hpp"
#include "hac/distill/teacher.hpp"
#include "hac/eval/abx.hpp"
#include "hac/eval/dtw.hpp"
#include "hac/eval/pnmi.hpp"
#include "hac/eval/recon_metrics.hpp"
#include "hac/eval/word_f1.hpp"
#include "hac/synth/corpus.hpp"
#include "hac/train/trainer.hpp"

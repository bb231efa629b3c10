#pragma once

#include <chaosbb/channel.hpp>
#include <chaosbb/config.hpp>
#include <chaosbb/experiment.hpp>
#include <chaosbb/fir.hpp>
#include <chaosbb/random.hpp>
#include <chaosbb/report.hpp>
#include <chaosbb/rrc.hpp>
#include <chaosbb/rx.hpp>
#include <chaosbb/theory.hpp>
#include <chaosbb/tx.hpp>
#include <chaosbb/waveform.hpp>

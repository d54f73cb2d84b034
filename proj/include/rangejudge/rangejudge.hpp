#pragma once

#include "rangejudge/cache.hpp"
#include "rangejudge/corpus.hpp"
#include "rangejudge/decode.hpp"
#include "rangejudge/dimension.hpp"
#include "rangejudge/error.hpp"
#include "rangejudge/experiment.hpp"
#include "rangejudge/http_provider.hpp"
#include "rangejudge/prompts.hpp"
#include "rangejudge/providers.hpp"
#include "rangejudge/ranges.hpp"
#include "rangejudge/report.hpp"
#include "rangejudge/stats.hpp"
#include "rangejudge/summeval.hpp"
#include "rangejudge/synthetic_corpus.hpp"
#include "rangejudge/tuning.hpp"

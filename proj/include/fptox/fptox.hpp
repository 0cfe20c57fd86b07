#pragma once

// Umbrella header: the whole toolkit except the HTTP transport, which lives
// in fptox/llm_http.hpp so that only network-using translation units pay for
// the socket layer.

#include "fptox/classifiers.hpp"
#include "fptox/context.hpp"
#include "fptox/context_kind.hpp"
#include "fptox/corpus.hpp"
#include "fptox/error.hpp"
#include "fptox/eval.hpp"
#include "fptox/features.hpp"
#include "fptox/lexicon.hpp"
#include "fptox/llm.hpp"
#include "fptox/pipeline.hpp"
#include "fptox/rng.hpp"
#include "fptox/rule_engine.hpp"
#include "fptox/synth.hpp"

#pragma once

#include "slotqa/bm25.hpp"
#include "slotqa/corpus.hpp"
#include "slotqa/delta.hpp"
#include "slotqa/errors.hpp"
#include "slotqa/evaluation.hpp"
#include "slotqa/harness.hpp"
#include "slotqa/memory.hpp"
#include "slotqa/promptgen.hpp"
#include "slotqa/retrieval.hpp"
#include "slotqa/similarity.hpp"
#include "slotqa/types.hpp"

#pragma once

#include "taggad/adapters.hpp"
#include "taggad/common.hpp"
#include "taggad/diff.hpp"
#include "taggad/disassort.hpp"
#include "taggad/eval.hpp"
#include "taggad/graph.hpp"
#include "taggad/high_order.hpp"
#include "taggad/low_order.hpp"
#include "taggad/pipeline.hpp"
#include "taggad/projection.hpp"
#include "taggad/synthetic.hpp"

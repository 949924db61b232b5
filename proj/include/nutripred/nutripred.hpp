#pragma once

// Umbrella header for the whole library.

#include "nutripred/adaboost.hpp"
#include "nutripred/csv.hpp"
#include "nutripred/data.hpp"
#include "nutripred/errors.hpp"
#include "nutripred/evaluation.hpp"
#include "nutripred/forest.hpp"
#include "nutripred/gbt.hpp"
#include "nutripred/matrix.hpp"
#include "nutripred/model.hpp"
#include "nutripred/oblivious.hpp"
#include "nutripred/parallel.hpp"
#include "nutripred/pipeline.hpp"
#include "nutripred/random.hpp"
#include "nutripred/report.hpp"
#include "nutripred/schema.hpp"
#include "nutripred/selection.hpp"
#include "nutripred/smote.hpp"
#include "nutripred/svg.hpp"
#include "nutripred/synthetic.hpp"
#include "nutripred/tree.hpp"
#include "nutripred/tuning.hpp"

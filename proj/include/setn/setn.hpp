#pragma once

#include "setn/core/errors.hpp"
#include "setn/data/records.hpp"
#include "setn/data/synthetic.hpp"
#include "setn/data/taxonomy.hpp"
#include "setn/eval/ablation.hpp"
#include "setn/eval/embedding_matrix.hpp"
#include "setn/eval/metrics.hpp"
#include "setn/eval/report.hpp"
#include "setn/graph/layers.hpp"
#include "setn/graph/stock_graph.hpp"
#include "setn/model/setn_model.hpp"
#include "setn/numerics/adam.hpp"
#include "setn/numerics/grad_check.hpp"
#include "setn/numerics/init.hpp"
#include "setn/numerics/ops.hpp"
#include "setn/numerics/tape.hpp"
#include "setn/numerics/tensor.hpp"
#include "setn/text/encoder.hpp"
#include "setn/text/vocab.hpp"
#include "setn/train/checkpoint.hpp"
#include "setn/train/config.hpp"
#include "setn/train/split.hpp"
#include "setn/train/trainer.hpp"

#pragma once

#include "xmodal/bm25.hpp"
#include "xmodal/embedding_store.hpp"
#include "xmodal/errors.hpp"
#include "xmodal/evaluation.hpp"
#include "xmodal/npairs_loss.hpp"
#include "xmodal/optimizer.hpp"
#include "xmodal/projection.hpp"
#include "xmodal/retrieval.hpp"
#include "xmodal/synthetic.hpp"
#include "xmodal/training.hpp"

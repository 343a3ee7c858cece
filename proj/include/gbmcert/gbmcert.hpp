#pragma once

#include "gbmcert/activation_bounds.hpp"
#include "gbmcert/autodiff/tape.hpp"
#include "gbmcert/certification.hpp"
#include "gbmcert/certify.hpp"
#include "gbmcert/cnn_gbm.hpp"
#include "gbmcert/core/error.hpp"
#include "gbmcert/core/interval.hpp"
#include "gbmcert/core/linalg.hpp"
#include "gbmcert/core/matrix.hpp"
#include "gbmcert/core/scalar.hpp"
#include "gbmcert/data/dataset.hpp"
#include "gbmcert/data/embeddings.hpp"
#include "gbmcert/data/synonyms.hpp"
#include "gbmcert/data/synthetic.hpp"
#include "gbmcert/gbm.hpp"
#include "gbmcert/lstm_gbm.hpp"
#include "gbmcert/models/model.hpp"
#include "gbmcert/s4_gbm.hpp"
#include "gbmcert/train/checkpoint.hpp"
#include "gbmcert/train/history.hpp"
#include "gbmcert/train/loss.hpp"
#include "gbmcert/train/optimizer.hpp"
#include "gbmcert/train/trainer.hpp"

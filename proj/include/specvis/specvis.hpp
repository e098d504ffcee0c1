#pragma once

// Everything except the command-line layer.

#include "specvis/core/error.hpp"
#include "specvis/core/hash.hpp"
#include "specvis/core/keyvalue.hpp"
#include "specvis/core/random.hpp"
#include "specvis/datasets/dataset.hpp"
#include "specvis/datasets/io.hpp"
#include "specvis/datasets/splits.hpp"
#include "specvis/evaluation/protocols.hpp"
#include "specvis/evaluation/render.hpp"
#include "specvis/evaluation/synthetic.hpp"
#include "specvis/models/classifier.hpp"
#include "specvis/models/model_io.hpp"
#include "specvis/numerics/adam.hpp"
#include "specvis/numerics/network.hpp"
#include "specvis/numerics/serialize.hpp"
#include "specvis/saliency/saliency.hpp"

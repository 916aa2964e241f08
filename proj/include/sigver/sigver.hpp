#pragma once

#include "sigver/dataset.hpp"
#include "sigver/eer.hpp"
#include "sigver/error.hpp"
#include "sigver/evaluation.hpp"
#include "sigver/ged.hpp"
#include "sigver/graph_io.hpp"
#include "sigver/image.hpp"
#include "sigver/keypoint_graph.hpp"
#include "sigver/lsap.hpp"
#include "sigver/network.hpp"
#include "sigver/png_io.hpp"
#include "sigver/preprocess.hpp"
#include "sigver/report.hpp"
#include "sigver/score_cache.hpp"
#include "sigver/scoring.hpp"
#include "sigver/triplet.hpp"

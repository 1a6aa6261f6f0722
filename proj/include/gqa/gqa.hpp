#ifndef GQA_GQA_HPP
#define GQA_GQA_HPP

// Umbrella header for the geometry quality assessment toolkit.

#include "gqa/common.hpp"
#include "gqa/dataset.hpp"
#include "gqa/distortions.hpp"
#include "gqa/geometry.hpp"
#include "gqa/io.hpp"
#include "gqa/kdtree.hpp"
#include "gqa/metrics.hpp"
#include "gqa/model.hpp"
#include "gqa/net.hpp"
#include "gqa/nn.hpp"
#include "gqa/point_cloud.hpp"
#include "gqa/rank.hpp"
#include "gqa/rng.hpp"
#include "gqa/stats.hpp"
#include "gqa/synthetic.hpp"
#include "gqa/train.hpp"

#endif  // GQA_GQA_HPP

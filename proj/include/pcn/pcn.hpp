#pragma once

#include "pcn/adam.hpp"
#include "pcn/assignment.hpp"
#include "pcn/config.hpp"
#include "pcn/datagen.hpp"
#include "pcn/depth.hpp"
#include "pcn/kdtree.hpp"
#include "pcn/losses.hpp"
#include "pcn/mesh.hpp"
#include "pcn/metrics.hpp"
#include "pcn/model.hpp"
#include "pcn/ply.hpp"
#include "pcn/point_cloud.hpp"
#include "pcn/registration.hpp"
#include "pcn/rng.hpp"
#include "pcn/tensor.hpp"
#include "pcn/train.hpp"

// Umbrella header.
#pragma once

#include "asj/detect.hpp"
#include "asj/distribution.hpp"
#include "asj/eval.hpp"
#include "asj/geometry.hpp"
#include "asj/image.hpp"
#include "asj/matching.hpp"
#include "asj/parallel.hpp"
#include "asj/scale.hpp"
#include "asj/sector.hpp"
#include "asj/serialize.hpp"
#include "asj/synthetic.hpp"

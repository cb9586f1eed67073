#pragma once

#include <homl/bundled.hpp>

namespace fx {
using namespace homl::bundled;
}

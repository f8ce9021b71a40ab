#pragma once

#include "ellsrc/assembly.hpp"
#include "ellsrc/forward.hpp"
#include "ellsrc/geometry.hpp"
#include "ellsrc/harness.hpp"
#include "ellsrc/inversion.hpp"
#include "ellsrc/io.hpp"
#include "ellsrc/radii.hpp"
#include "ellsrc/spectral.hpp"

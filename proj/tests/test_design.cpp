#include <catch2/catch_amalgamated.hpp>
#include "twics/twics.hpp"

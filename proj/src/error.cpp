#include "treeattn/error.hpp"

#include <gtest/gtest.h>
#include "asj/asj.hpp"

TEST(Placeholder, Builds) { SUCCEED(); }

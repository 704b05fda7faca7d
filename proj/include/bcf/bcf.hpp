#pragma once

#include "bcf/csv.hpp"
#include "bcf/errors.hpp"
#include "bcf/learners.hpp"
#include "bcf/linalg.hpp"
#include "bcf/oracle.hpp"
#include "bcf/pipeline.hpp"
#include "bcf/random.hpp"
#include "bcf/rankreg.hpp"
#include "bcf/simdg.hpp"

#pragma once

// Everything: metrics, mollifier, geodesics, certificates, verifier,
// totally normal neighborhoods, file formats and the pipeline.
#include "lipexp/pipeline.hpp"

#pragma once

#include "camkit/cam.hpp"
#include "camkit/datasets/annotation.hpp"
#include "camkit/datasets/collection.hpp"
#include "camkit/errors.hpp"
#include "camkit/image_ops.hpp"
#include "camkit/inference/onnx_scorer.hpp"
#include "camkit/inference/scorer.hpp"
#include "camkit/inference/stub_scorer.hpp"
#include "camkit/io/bundle.hpp"
#include "camkit/io/npy.hpp"
#include "camkit/io/png.hpp"
#include "camkit/mask.hpp"
#include "camkit/metrics/curves.hpp"
#include "camkit/metrics/evaluate.hpp"
#include "camkit/metrics/report.hpp"
#include "camkit/metrics/segmentation.hpp"
#include "camkit/metrics/zones.hpp"
#include "camkit/postprocess.hpp"
#include "camkit/render.hpp"
#include "camkit/tensor.hpp"

#pragma once

#include <string>
#include <vector>

#include "birdseg/matrix.hpp"
#include "birdseg/metrics.hpp"
#include "birdseg/nnet.hpp"

namespace birdseg::attention {

/// Attention intensity congruent to the network input, max-normalized to
/// [0,1]; an all-zero map stays all-zero.
using Heatmap = Matrix;

/// Gradient class activation map: relu of the last conv layer's feature maps
/// weighted by the spatial mean of the pre-sigmoid score gradient, bilinearly
/// upsampled to the input spatial size.
Heatmap grad_cam(const nnet::Network& net, const nnet::Tensor& input);

/// Backpropagates the pre-sigmoid score to the input with guided relu
/// gating (forward sign and upstream sign); heatmap is the channel-max of the
/// absolute input gradient.
Heatmap guided_backprop(const nnet::Network& net, const nnet::Tensor& input);

/// Binarize at >= threshold, take 8-connected components, drop components
/// smaller than min_area pixels, return tight boxes sorted by (t0, f0).
std::vector<metrics::BBox> heatmap_to_bboxes(const Heatmap& hm, double threshold,
                                             std::size_t min_area);

/// One line per box: "0 cx cy w h" with 6 decimal places, coordinates
/// normalized by the image size. Boxes are in image-row convention
/// (row 0 = top = highest frequency); see metrics::flip_rows for converting
/// spectrogram-bin boxes.
std::string export_yolo_labels(const std::vector<metrics::BBox>& boxes, std::size_t img_w,
                               std::size_t img_h);

}  // namespace birdseg::attention

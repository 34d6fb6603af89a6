// Copyright 2026 The Tilefuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tilefuse/mask.h"

#include <algorithm>
#include <limits>
#include <string>

#include "tilefuse/error.h"

namespace tilefuse {

namespace {

// Appends a pixel-index interval [begin, end) to an RLE count list being
// built in scan order; `cursor` is the end of the previous foreground run.
void AppendInterval(std::vector<std::uint32_t>& counts, std::uint64_t& cursor,
                    std::uint64_t begin, std::uint64_t end) {
  if (begin == cursor && counts.size() >= 2) {
    // Extends the previous foreground run (segments from adjacent columns).
    counts.back() += static_cast<std::uint32_t>(end - begin);
  } else {
    counts.push_back(static_cast<std::uint32_t>(begin - cursor));
    counts.push_back(static_cast<std::uint32_t>(end - begin));
  }
  cursor = end;
}

void CheckFrameSize(int width, int height) {
  if (width < 0 || height < 0) throw InvalidArgument("negative mask dimensions");
  if (static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height) >
      std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("mask frame too large for 32-bit run counts");
  }
}

}  // namespace

BitMask::BitMask(int width, int height)
    : width_(width), height_(height), bits_(static_cast<std::size_t>(width) * height, 0) {
  if (width < 0 || height < 0) throw InvalidArgument("negative mask dimensions");
}

std::uint64_t BitMask::Count() const {
  return static_cast<std::uint64_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::uint64_t RleMask::Area() const {
  std::uint64_t area = 0;
  for (std::size_t i = 1; i < counts.size(); i += 2) area += counts[i];
  return area;
}

void RleMask::Validate() const {
  CheckFrameSize(width, height);
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i > 0 && counts[i] == 0) {
      throw InvalidArgument("RLE counts contain an interior zero run at position " +
                            std::to_string(i));
    }
    sum += counts[i];
  }
  const std::uint64_t expected = static_cast<std::uint64_t>(width) * height;
  if (sum != expected) {
    throw InvalidArgument("RLE counts sum " + std::to_string(sum) + " does not match " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
}

RleMask RleEncode(const BitMask& grid) {
  RleMask out{grid.width(), grid.height(), {}};
  CheckFrameSize(grid.width(), grid.height());
  bool current = false;
  std::uint32_t run = 0;
  for (int x = 0; x < grid.width(); ++x) {
    for (int y = 0; y < grid.height(); ++y) {
      const bool v = grid.at(x, y);
      if (v != current) {
        out.counts.push_back(run);
        run = 0;
        current = v;
      }
      ++run;
    }
  }
  if (run > 0 || out.counts.empty()) out.counts.push_back(run);
  return out;
}

BitMask RleDecode(const RleMask& mask) {
  mask.Validate();
  BitMask grid(mask.width, mask.height);
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < mask.counts.size(); ++i) {
    const std::uint64_t end = pos + mask.counts[i];
    if (i % 2 == 1) {
      for (std::uint64_t p = pos; p < end; ++p) {
        grid.set(static_cast<int>(p / mask.height), static_cast<int>(p % mask.height));
      }
    }
    pos = end;
  }
  return grid;
}

double MaskIou(const RleMask& a, const RleMask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw InvalidArgument("mask_iou: frame sizes differ (" + std::to_string(a.width) + "x" +
                          std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                          std::to_string(b.height) + ")");
  }
  const std::uint64_t area_a = a.Area();
  const std::uint64_t area_b = b.Area();
  // Walk both count lists in lockstep over the shared scan order.
  std::uint64_t inter = 0;
  std::size_t ia = 0, ib = 0;
  std::uint64_t left_a = a.counts.empty() ? 0 : a.counts[0];
  std::uint64_t left_b = b.counts.empty() ? 0 : b.counts[0];
  while (ia < a.counts.size() && ib < b.counts.size()) {
    if (left_a == 0) {
      if (++ia < a.counts.size()) left_a = a.counts[ia];
      continue;
    }
    if (left_b == 0) {
      if (++ib < b.counts.size()) left_b = b.counts[ib];
      continue;
    }
    const std::uint64_t step = std::min(left_a, left_b);
    if ((ia % 2 == 1) && (ib % 2 == 1)) inter += step;
    left_a -= step;
    left_b -= step;
  }
  const std::uint64_t uni = area_a + area_b - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

RunList RunsFromRle(const RleMask& mask, int origin_x, int origin_y) {
  RunList runs;
  if (mask.height == 0) return runs;
  const std::uint64_t h = static_cast<std::uint64_t>(mask.height);
  std::uint64_t pos = 0;
  for (std::size_t i = 0; i < mask.counts.size(); ++i) {
    const std::uint64_t end = pos + mask.counts[i];
    if (i % 2 == 1) {
      // A foreground run may wrap over several columns.
      std::uint64_t p = pos;
      while (p < end) {
        const std::uint64_t col = p / h;
        const std::uint64_t col_end = std::min(end, (col + 1) * h);
        runs.push_back(ColumnRun{origin_x + static_cast<int>(col),
                                 origin_y + static_cast<int>(p - col * h),
                                 origin_y + static_cast<int>(col_end - col * h)});
        p = col_end;
      }
    }
    pos = end;
  }
  return runs;
}

RleMask RleFromRuns(std::span<const ColumnRun> runs, const Rect& frame) {
  CheckFrameSize(frame.w, frame.h);
  RleMask out{frame.w, frame.h, {}};
  const std::uint64_t h = static_cast<std::uint64_t>(frame.h);
  std::uint64_t cursor = 0;
  for (const ColumnRun& r : runs) {
    if (r.x < frame.x || r.x >= frame.right() || r.y0 < frame.y || r.y1 > frame.bottom() ||
        r.y0 >= r.y1) {
      throw InvalidArgument("run outside of target frame");
    }
    const std::uint64_t base = static_cast<std::uint64_t>(r.x - frame.x) * h;
    const std::uint64_t begin = base + static_cast<std::uint64_t>(r.y0 - frame.y);
    const std::uint64_t end = base + static_cast<std::uint64_t>(r.y1 - frame.y);
    if (begin < cursor) throw InvalidArgument("runs are not sorted");
    AppendInterval(out.counts, cursor, begin, end);
  }
  const std::uint64_t total = static_cast<std::uint64_t>(frame.w) * h;
  if (cursor < total || out.counts.empty()) {
    out.counts.push_back(static_cast<std::uint32_t>(total - cursor));
  }
  return out;
}

RunList ClipRuns(std::span<const ColumnRun> runs, const Rect& clip) {
  RunList out;
  for (const ColumnRun& r : runs) {
    if (r.x < clip.x || r.x >= clip.right()) continue;
    const int y0 = std::max(r.y0, clip.y);
    const int y1 = std::min(r.y1, clip.bottom());
    if (y0 < y1) out.push_back(ColumnRun{r.x, y0, y1});
  }
  return out;
}

RunList TranslateRuns(std::span<const ColumnRun> runs, int dx, int dy) {
  RunList out(runs.begin(), runs.end());
  for (ColumnRun& r : out) {
    r.x += dx;
    r.y0 += dy;
    r.y1 += dy;
  }
  return out;
}

std::optional<Rect> RunsBounds(std::span<const ColumnRun> runs) {
  if (runs.empty()) return std::nullopt;
  int x0 = runs.front().x, x1 = runs.front().x;
  int y0 = runs.front().y0, y1 = runs.front().y1;
  for (const ColumnRun& r : runs) {
    x0 = std::min(x0, r.x);
    x1 = std::max(x1, r.x);
    y0 = std::min(y0, r.y0);
    y1 = std::max(y1, r.y1);
  }
  return Rect{x0, y0, x1 - x0 + 1, y1 - y0};
}

std::uint64_t RunsArea(std::span<const ColumnRun> runs) {
  std::uint64_t area = 0;
  for (const ColumnRun& r : runs) area += static_cast<std::uint64_t>(r.y1 - r.y0);
  return area;
}

std::uint64_t RunsIntersectionArea(std::span<const ColumnRun> a, std::span<const ColumnRun> b) {
  std::uint64_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const ColumnRun& ra = a[i];
    const ColumnRun& rb = b[j];
    if (ra.x != rb.x) {
      (ra.x < rb.x ? i : j)++;
      continue;
    }
    const int lo = std::max(ra.y0, rb.y0);
    const int hi = std::min(ra.y1, rb.y1);
    if (lo < hi) inter += static_cast<std::uint64_t>(hi - lo);
    (ra.y1 < rb.y1 ? i : j)++;
  }
  return inter;
}

RunList NormalizeRuns(RunList runs) {
  std::sort(runs.begin(), runs.end(), [](const ColumnRun& l, const ColumnRun& r) {
    return l.x != r.x ? l.x < r.x : l.y0 < r.y0;
  });
  RunList out;
  for (const ColumnRun& r : runs) {
    if (r.y0 >= r.y1) continue;
    if (!out.empty() && out.back().x == r.x && r.y0 <= out.back().y1) {
      out.back().y1 = std::max(out.back().y1, r.y1);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace tilefuse

"""Sweep the candidate budget and watch precision trade against recall.

With a small budget only the strongest detections survive, so precision is
high and recall low; widening the budget admits weaker candidates, raising
recall while precision falls.  The gram matrices are built once and reused
across the sweep.
"""

from actmatch import (
    MatchConfig,
    SegmentationConfig,
    SynthConfig,
    aggregate,
    annotations_by_video,
    encode_segments,
    evaluate,
    gram_matrix,
    gt_pairs,
    match_from_gram,
    synth_generate,
)


def main():
    cfg = SynthConfig(dim=16, n_pairs=10, frames_per_video=300,
                      segments_per_video=3, length_range=(60, 90),
                      noise_level=0.05, seed=7)
    videos, annotations = synth_generate(cfg)
    by_vid = annotations_by_video(annotations)
    seg = SegmentationConfig(window=21, stride=2)

    grams = []
    for p in range(cfg.n_pairs):
        xa, xb = videos[2 * p], videos[2 * p + 1]
        gram = gram_matrix(encode_segments(xa, seg), encode_segments(xb, seg),
                           xa.video_id, xb.video_id)
        grams.append((gram, gt_pairs(by_vid[xa.video_id],
                                     by_vid[xb.video_id])))

    print("top_k  precision  recall  f1")
    for k in (5, 10, 20, 50):
        mc = MatchConfig(min_run=4, top_k=k)
        agg = aggregate([evaluate(match_from_gram(g, mc), gt)
                         for g, gt in grams])
        print(f"{k:5d}  {agg.precision:9.1f}  {agg.recall:6.1f}  {agg.f1:5.1f}")


if __name__ == "__main__":
    main()

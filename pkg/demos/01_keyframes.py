"""Keyframe curation on a toy capture: duplicates collapse, blurred frames drop out."""
import numpy as np

from voleta.frames import Frame, blur_score, gaussian_blur, hamming_distance, perceptual_hash, select_keyframes

rng = np.random.default_rng(0)
views = [rng.integers(0, 256, (96, 128, 3), dtype=np.uint8) for _ in range(4)]

seq = []
for v in views:
    seq += [v, v, np.clip(v.astype(int) + 6, 0, 255).astype(np.uint8)]   # a view held for three frames
blurry = gaussian_blur(views[0].mean(axis=2), 20)
seq.append(blurry.astype(np.uint8))
frames = [Frame(i, px) for i, px in enumerate(seq)]

h0, h1 = perceptual_hash(frames[0]), perceptual_hash(frames[3])
print("hash of frame 0:", h0.hex(), " distance to next view:", hamming_distance(h0, h1))

scores = [blur_score(f) for f in frames]
print("blur scores:", np.round(scores, 3))
threshold = 0.5 * min(scores[:-1])

sel = select_keyframes(frames, hamming_threshold=12, blur_threshold=threshold)
print("kept:", sel.kept)
print("duplicates:", sel.rejected_duplicate)
print("blurry:", sel.rejected_blurry)
print("retention: %.1f%%" % (100 * sel.retention_ratio))

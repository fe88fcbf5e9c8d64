"""Reads CLI-written NIfTI files with nibabel and compares them to the raw+sidecar copies."""

import json
import pathlib
import shutil
import subprocess
import sys

try:
    import nibabel
    import numpy as np
except ImportError:
    print("nibabel not available, skipping")
    sys.exit(77)


def generate(cli, out, fmt, seed):
    subprocess.run([cli, "generate", "--preset", "simple", "--shape", "24,20,16", "--seed", str(seed),
                    "-n", "1", "-q", "--format", fmt, "--out", str(out)], check=True)


def read_raw(path):
    meta = json.loads(path.with_suffix(".json").read_text())
    dtype = {"uint8": np.uint8, "float32": np.float32}[meta["dtype"]]
    data = np.fromfile(path, dtype="<" + np.dtype(dtype).str[1:])
    return data.reshape(meta["shape"][::-1]).transpose(2, 1, 0), meta


def main():
    cli, tmp = sys.argv[1], pathlib.Path(sys.argv[2])
    shutil.rmtree(tmp, ignore_errors=True)
    failures = 0
    for seed in (1, 2, 3):
        nii, raw = tmp / f"nii_{seed}", tmp / f"raw_{seed}"
        generate(cli, nii, "nii.gz", seed)
        generate(cli, raw, "raw", seed)
        for kind, dtype in (("image", np.float32), ("label", np.uint8)):
            img = nibabel.load(str(nii / f"sample_0000_{kind}.nii.gz"))
            want, meta = read_raw(raw / f"sample_0000_{kind}.raw")
            hdr = img.header
            checks = {
                "shape": img.shape == (24, 20, 16),
                "dtype": hdr.get_data_dtype() == np.dtype(dtype),
                "pixdim": np.allclose(hdr.get_zooms(), [meta["voxel_size"]] * 3),
                "data": np.array_equal(np.asanyarray(img.dataobj), want),
                "sform": int(hdr["sform_code"]) == 1,
            }
            for name, ok in checks.items():
                if not ok:
                    print(f"seed {seed} {kind}: {name} mismatch")
                    failures += 1
    print("ok" if failures == 0 else f"{failures} mismatches")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())

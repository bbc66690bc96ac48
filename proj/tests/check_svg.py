import sys
import xml.etree.ElementTree as ET

NS = "{http://www.w3.org/2000/svg}"

for path in sys.argv[1:]:
    root = ET.parse(path).getroot()
    assert root.tag == NS + "svg", f"{path}: root is {root.tag}"
    polylines = root.findall(f".//{NS}polyline")
    assert len(polylines) == 2, f"{path}: {len(polylines)} polylines"
    assert root.find(f".//{NS}g[@id='axes']") is not None, f"{path}: no axes group"
    print(f"{path}: ok")

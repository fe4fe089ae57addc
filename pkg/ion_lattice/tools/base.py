import time
import xml.etree.ElementTree as ET

from .bunching_parameter import ToolBunchingParameter
from .crystal_modes import ToolCrystalModes
from .lattice_frequency import ToolLatticeFrequency
from .micromotion_report import ToolMicromotionReport
from .scattering_scan import ToolScatteringScan


class LatticeTools:
    def get_all_tools():
        """Returns a list of all tools available"""
        return [
            ToolLatticeFrequency(),
            ToolBunchingParameter(),
            ToolCrystalModes(),
            ToolScatteringScan(),
            ToolMicromotionReport(),
        ]

    def __init__(self, desired_tools=None):
        """Constructor.

        Args:

            desired_tools: tools to expose to the LLM. Default: all of them
        """
        if desired_tools is None:
            self.tools = LatticeTools.get_all_tools()
        else:
            self.tools = desired_tools

        self.tool_mapping = dict(zip([x.name for x in self.tools], self.tools))
        self.call_return_string = """
<function_results>
<result>
<tool_name>{{TOOLNAME}}</tool_name>
<stdout>
{{TOOLRESULTS}}
</stdout>
</result>
</function_results>"""
        self.invoke_log = []

    def invoke_from_cmd(self, xml_cmd):
        """Invokes a tool given the xml command sent by the LLM"""
        cmd = self.parse_command(xml_cmd)
        if "error" in cmd:
            return f"Error: {cmd['error']}"
        return self.invoke_tool(cmd["tool_name"], **cmd["parameters"])

    def parse_command(self, xml_cmd):
        """Parses an <invoke> command into the tool name and its string arguments.

        Quantities stay strings with their units ("25 mK"); each tool parses them.
        """
        try:
            root = ET.fromstring(xml_cmd)
        except ET.ParseError as e:
            print(str(e))
            return {"tool_name": "unknown", "parameters": {}, "error": str(e)}

        tool_name = root.findtext("tool_name")
        if tool_name is None:
            return {"tool_name": "unknown", "parameters": {}, "error": "no <tool_name> in command"}
        params = root.find("parameters")
        arguments = {}
        if params is not None:
            arguments = {x.tag: (x.text or "").strip() for x in params}
        return {"tool_name": tool_name.strip(), "parameters": arguments}

    def get_tool_descriptions(self):
        """Retrieves the description of all tools available"""
        root = ET.Element("tools")
        for x in self.tools:
            root.append(self._describe(x.tool_description))
        ET.indent(root)
        return ET.tostring(root, encoding="unicode")

    def _describe(self, description_dict):
        """<tool_description> element with one <parameter> per input, marked required or optional"""
        schema = description_dict["input_schema"]
        required = set(schema.get("required", []))
        node = ET.Element("tool_description")
        ET.SubElement(node, "tool_name").text = description_dict["name"]
        ET.SubElement(node, "description").text = description_dict["description"]
        params = ET.SubElement(node, "parameters")
        for name, spec in schema["properties"].items():
            p = ET.SubElement(params, "parameter", required=str(name in required).lower())
            ET.SubElement(p, "name").text = name
            for key, value in spec.items():
                ET.SubElement(p, key).text = str(value)
        return node

    def invoke_tool(self, tool_name, return_results_only=False, **kwargs):
        cur_tool = self.tool_mapping.get(tool_name)
        if cur_tool is None:
            return f"Tool {tool_name} not found. Please check tool name. Available tools: {list(self.tool_mapping.keys())}"

        t0 = time.time()
        try:
            ans = cur_tool(**kwargs)
        except Exception as e:
            print(f"Tool execution failed: {str(e)}")
            ans = f"Error: {str(e)}"

        self.invoke_log.append(
            {
                "tool_name": tool_name,
                "execution_time": time.time() - t0,
            }
        )
        if return_results_only:
            return ans
        return self.call_return_string.replace("{{TOOLNAME}}", tool_name).replace(
            "{{TOOLRESULTS}}", ans
        )
